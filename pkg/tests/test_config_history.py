"""
Tests for persisted settings and the run history.
"""

import json

import pytest
from pydantic import ValidationError

from anisomesh.config.manager import AnisomeshSettings, ConfigManager
from anisomesh.core.tensor import MetricKind
from anisomesh.utils.history import MAX_ENTRIES, HistoryManager

pytestmark = pytest.mark.unit


class TestConfigManager:
    def test_defaults(self, tmp_path):
        settings = ConfigManager(tmp_path).settings
        assert settings.initial_n == 16
        assert settings.iterations == 10
        assert settings.n_target == 4000
        assert settings.metric is MetricKind.NEW_H1
        assert settings.log_level == "INFO"

    def test_set_persists(self, tmp_path):
        ConfigManager(tmp_path).set(n_target=890, metric=MetricKind.MODIFIED_HESSIAN)
        stored = json.loads((tmp_path / "config.json").read_text())
        assert stored == {"n_target": 890, "metric": "modified_hessian"}
        reloaded = ConfigManager(tmp_path)
        assert reloaded.get("n_target") == 890
        assert reloaded.get("metric") is MetricKind.MODIFIED_HESSIAN

    def test_environment_wins_over_file(self, tmp_path, monkeypatch):
        manager = ConfigManager(tmp_path)
        manager.set(iterations=3)
        monkeypatch.setenv("ANISOMESH_ITERATIONS", "5")
        assert manager.get("iterations") == 5

    def test_invalid_value_is_not_saved(self, tmp_path):
        manager = ConfigManager(tmp_path)
        with pytest.raises(ValidationError):
            manager.set(iterations=0)
        with pytest.raises(ValidationError):
            manager.set(split_threshold=0.9)
        assert not (tmp_path / "config.json").exists()

    def test_unknown_key(self, tmp_path):
        with pytest.raises(KeyError):
            ConfigManager(tmp_path).set(colour="blue")

    def test_none_is_ignored(self, tmp_path):
        manager = ConfigManager(tmp_path)
        manager.set(n_target=500, iterations=None)
        assert manager.get("iterations") == 10

    def test_reset(self, tmp_path):
        manager = ConfigManager(tmp_path)
        manager.set(n_target=500)
        manager.reset()
        assert manager.get("n_target") == 4000
        assert ConfigManager(tmp_path).get("n_target") == 4000

    def test_corrupt_file_falls_back_to_defaults(self, tmp_path):
        (tmp_path / "config.json").write_text("{not json")
        assert ConfigManager(tmp_path).get("n_target") == 4000

    def test_invalid_file_values_fall_back_to_defaults(self, tmp_path):
        (tmp_path / "config.json").write_text(json.dumps({"iterations": -4}))
        assert ConfigManager(tmp_path).get("iterations") == 10

    def test_show_config_is_plain_json(self, tmp_path):
        shown = ConfigManager(tmp_path).show_config()
        assert shown["metric"] == "new_h1"
        json.dumps(shown)

    def test_diagnostics(self, tmp_path):
        rows = ConfigManager(tmp_path).run_diagnostics()
        names = [name for name, _, _ in rows]
        assert {"python", "numpy", "scipy", "click", "rich", "home"} <= set(names)
        assert dict((name, ok) for name, ok, _ in rows)["numpy"] is True

    def test_settings_threshold_order(self):
        with pytest.raises(ValidationError, match="Thresholds"):
            AnisomeshSettings(collapse_threshold=0.8, split_threshold=0.9)


class TestHistoryManager:
    def add(self, history, command="run", example="ex2", metric="new-h1"):
        return history.add_entry(command, example, metric, 100, final={"nbt": 98, "h1_err": 0.1, "h2_err": 2.0})

    def test_add_and_reload(self, tmp_path):
        entry = self.add(HistoryManager(tmp_path))
        assert entry["nbt"] == 98
        assert entry["status"] == "ok"
        reloaded = HistoryManager(tmp_path)
        assert len(reloaded.history) == 1
        assert reloaded.history[0]["h1_err"] == 0.1

    def test_missing_final(self, tmp_path):
        entry = HistoryManager(tmp_path).add_entry("run", "ex1", "new-l2", 10, status="failed")
        assert entry["nbt"] is None
        assert entry["status"] == "failed"

    def test_search(self, tmp_path):
        history = HistoryManager(tmp_path)
        self.add(history, example="ex1")
        self.add(history, command="compare", metric="mod-hessian")
        self.add(history, example="ex3")
        assert len(history.search("EX1")) == 1
        assert len(history.search("hessian")) == 1
        assert len(history.search("run")) == 2

    def test_recent(self, tmp_path):
        history = HistoryManager(tmp_path)
        for n in range(5):
            history.add_entry("run", "ex2", "new-h1", n)
        assert [e["n_target"] for e in history.get_recent(2)] == [3, 4]
        assert history.get_recent(0) == []

    def test_capped(self, tmp_path):
        history = HistoryManager(tmp_path)
        history.history = [{"command": "run", "n_target": n} for n in range(MAX_ENTRIES)]
        self.add(history)
        assert len(history.history) == MAX_ENTRIES
        assert history.history[0]["n_target"] == 1

    def test_clear(self, tmp_path):
        history = HistoryManager(tmp_path)
        self.add(history)
        history.clear()
        assert HistoryManager(tmp_path).history == []
