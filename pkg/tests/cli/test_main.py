"""
命令行端到端测试

测试覆盖：
1. 四个子命令的退出码与输出文件
2. 配置错误 → 2，数值/收敛错误 → 3
3. 输出目录原子性与结果可复现
"""
import json
from pathlib import Path

import pandas as pd
import pytest

from src.cli.main import build_parser, main
from src.shared.scenario import load_scenario

SCENARIO_DIR = Path(__file__).resolve().parents[2] / "config" / "scenarios"


def _run(command: str, config: Path, out: Path, *extra: str) -> int:
    return main([command, "--config", str(config), "--out", str(out), *extra])


@pytest.fixture
def zero_kernel_scenario(small_scenario):
    """φ ≡ μ = −1：核函数恒为 0"""
    small_scenario["coefficients"]["phi_rxn"] = {"family": "constant", "value": -1.0}
    return small_scenario


@pytest.mark.unit
class TestParser:
    """测试参数解析"""

    def test_commands(self):
        parser = build_parser()
        for command in ("validate", "solve-kernel", "simulate"):
            args = parser.parse_args([command, "--config", "a.json", "--out", "o"])
            assert args.command == command
            assert args.oracle is False

    def test_verify_requires_kernel(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args(["verify", "--config", "a.json", "--out", "o"])

    @pytest.mark.parametrize(
        "path",
        sorted(p for p in SCENARIO_DIR.glob("*.json") if p.stem != "fault_unknown_field"),
        ids=lambda p: p.stem,
    )
    def test_shipped_scenarios_load(self, path):
        assert load_scenario(path).time.n_steps >= 1


@pytest.mark.integration
class TestValidateCommand:
    """测试 validate"""

    def test_passes(self, write_scenario, small_scenario, tmp_path):
        out = tmp_path / "out"
        assert _run("validate", write_scenario(small_scenario), out) == 0
        assert (out / "manifest.json").exists()
        report = json.loads((out / "report.json").read_text(encoding="utf-8"))
        assert report["passed"]
        assert report["mu_bound"]["bound"] == pytest.approx(0.0)
        manifest = json.loads((out / "manifest.json").read_text(encoding="utf-8"))
        assert manifest["command"] == "validate"
        assert manifest["exit_code"] == 0

    def test_bad_partial(self, tmp_path):
        out = tmp_path / "out"
        assert _run("validate", SCENARIO_DIR / "fault_bad_partial.json", out) == 2
        report = json.loads((out / "report.json").read_text(encoding="utf-8"))
        assert not report["passed"]

    def test_unknown_field(self, tmp_path):
        out = tmp_path / "out"
        assert _run("validate", SCENARIO_DIR / "fault_unknown_field.json", out) == 2
        assert not out.exists()

    def test_non_empty_output_dir(self, write_scenario, small_scenario, tmp_path):
        out = tmp_path / "out"
        out.mkdir()
        (out / "keep.txt").write_text("x", encoding="utf-8")
        assert _run("validate", write_scenario(small_scenario), out) == 2
        assert sorted(p.name for p in out.iterdir()) == ["keep.txt"]


@pytest.mark.integration
class TestSolveKernelCommand:
    """测试 solve-kernel 与 verify"""

    def test_zero_kernel(self, write_scenario, zero_kernel_scenario, tmp_path):
        out = tmp_path / "out"
        assert _run("solve-kernel", write_scenario(zero_kernel_scenario), out) == 0
        kernel = pd.read_csv(out / "kernel.csv")
        assert list(kernel.columns) == ["t", "r", "s", "p"]
        assert len(kernel) == 21 * 22 // 2
        assert (kernel["p"] == 0.0).all()
        p10 = pd.read_csv(out / "p10.csv")
        assert p10["p10"].iloc[0] == pytest.approx(1.5)
        summary = json.loads((out / "kernel_summary.json").read_text(encoding="utf-8"))
        assert summary["info"]["iterations"] == 1
        assert summary["coefficients"]["phi_rxn"] == {"family": "constant", "value": -1.0}
        assert summary["coefficients"]["U"]["family"] == "zero"

    def test_deterministic(self, write_scenario, small_scenario, tmp_path):
        small_scenario["coefficients"]["phi_rxn"] = {"family": "constant", "value": 2.0}
        config = write_scenario(small_scenario)
        assert _run("solve-kernel", config, tmp_path / "a") == 0
        assert _run("solve-kernel", config, tmp_path / "b") == 0
        for name in ("kernel.csv", "p1.csv", "p10.csv"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_oracle_columns(self, write_scenario, small_scenario, tmp_path):
        out = tmp_path / "out"
        assert _run("solve-kernel", write_scenario(small_scenario), out, "--oracle") == 0
        kernel = pd.read_csv(out / "kernel.csv")
        assert list(kernel.columns) == ["t", "r", "s", "p", "p_direct", "diff"]

    def test_nonconvergent(self, tmp_path):
        out = tmp_path / "out"
        assert _run("solve-kernel", SCENARIO_DIR / "fault_nonconvergent.json", out) == 3
        assert not out.exists()

    def test_verify_saved_kernel(self, write_scenario, small_scenario, tmp_path):
        small_scenario["coefficients"]["phi_rxn"] = {"family": "constant", "value": 2.0}
        config = write_scenario(small_scenario)
        assert _run("solve-kernel", config, tmp_path / "k") == 0
        out = tmp_path / "v"
        assert _run("verify", config, out, "--kernel", str(tmp_path / "k" / "kernel.csv")) == 0
        report = json.loads((out / "verify.json").read_text(encoding="utf-8"))
        assert report["mu"] == -1.0
        assert report["residual"]["diagonal"] < 1e-9
        assert report["residual"]["edge"] == 0.0
        saved = pd.read_csv(tmp_path / "k" / "p1.csv")
        again = pd.read_csv(out / "p1.csv")
        pd.testing.assert_frame_equal(saved, again)


@pytest.mark.integration
class TestSimulateCommand:
    """测试 simulate"""

    def test_zero_error(self, write_scenario, small_scenario, tmp_path, capsys):
        small_scenario["initial_conditions"]["observer"] = dict(small_scenario["initial_conditions"]["plant"])
        out = tmp_path / "out"
        assert _run("simulate", write_scenario(small_scenario), out) == 0
        norms = pd.read_csv(out / "norms.csv")
        assert list(norms.columns) == ["t", "c_tilde_norm", "W", "w_tilde_norm"]
        assert len(norms) == 51
        assert (norms["c_tilde_norm"] == 0.0).all()
        states = pd.read_csv(out / "states.csv")
        assert set(states["label"]) == {"u", "c", "c_hat", "c_tilde", "w_tilde", "u_hat"}
        summary = json.loads((out / "summary.json").read_text(encoding="utf-8"))
        assert summary["fit"]["converged"]
        assert summary["coefficients"]["D"] == {"family": "constant", "value": 1.0}
        assert "系数: D=constant  b=constant  phi_rxn=constant  U=zero" in capsys.readouterr().out
        assert (out / "manifest.json").exists()

    def test_nonpositive_diffusion(self, tmp_path):
        out = tmp_path / "out"
        assert _run("simulate", SCENARIO_DIR / "fault_nonpositive_D.json", out) == 2
        assert not out.exists()

    def test_norms_reproducible(self, write_scenario, small_scenario, tmp_path):
        small_scenario["initial_conditions"]["observer"] = {"family": "random", "amplitude": 0.5}
        config = write_scenario(small_scenario)
        assert _run("simulate", config, tmp_path / "a", "--seed", "3") == 0
        assert _run("simulate", config, tmp_path / "b", "--seed", "3") == 0
        assert (tmp_path / "a" / "norms.csv").read_bytes() == (tmp_path / "b" / "norms.csv").read_bytes()

    def test_grid_override(self, write_scenario, small_scenario, tmp_path):
        out = tmp_path / "out"
        assert _run("simulate", write_scenario(small_scenario), out, "--grid-n", "10") == 0
        summary = json.loads((out / "summary.json").read_text(encoding="utf-8"))
        assert summary["config"]["grid"]["n"] == 10
