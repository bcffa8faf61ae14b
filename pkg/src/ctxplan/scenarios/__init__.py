"""Bundled scenario files (JSON); see ctxplan.harness.builtin_scenario_path."""
