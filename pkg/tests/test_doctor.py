# tests/test_doctor.py
import json

import config
from tools import doctor


class TestDoctor:
    def test_numeric_checks_pass(self):
        checks = doctor.numeric_checks(seed=3)
        assert checks and all(c["ok"] for c in checks), checks

    def test_config_section(self, monkeypatch):
        assert doctor.dump_config()["valid"]
        monkeypatch.setattr(config, "DELTA_GRID_POINTS", 1)
        cfg = doctor.dump_config()
        assert not cfg["valid"] and "delta" in cfg["errors"]

    def test_json_report(self, tmp_path, capsys):
        out = tmp_path / "report.json"
        doctor.run(out)
        report = json.loads(out.read_text(encoding="utf-8"))
        assert {"environment", "config", "checks", "healthy"} <= set(report)
        assert "numpy" in report["environment"]["packages"]
        assert capsys.readouterr().out.startswith("OK: written")

    def test_markdown_report(self, tmp_path):
        out = tmp_path / "report.md"
        doctor.main(["-o", str(out)])
        text = out.read_text(encoding="utf-8")
        assert text.startswith("# RS-THP Doctor")
        assert "## Numeric checks" in text and "flops[zf-thp, n=12]" in text
