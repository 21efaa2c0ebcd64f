import csv
import io
import math

import numpy as np
import pytest

from coupled_mzi.cli import main

MINIMAL = """
detector.qpc1.T = 0.5
detector.qpc2.T = 0.5
detector.phi = pi/2
system.qpc1.T = 0.5
system.qpc2.T = 0.5
system.phi = 0
coupling.gamma = pi
"""

WEAK_VALUE_CONFIG = """
detector.qpc1.T = 0.5
detector.qpc2.T = 0.5
detector.phi = pi/2
system.qpc1.T = 0.8
system.qpc2.T = 0.5
system.phi = 0
coupling.gamma = pi/2
"""


@pytest.fixture
def config_path(tmp_path):
    path = tmp_path / "exp.conf"
    path.write_text(MINIMAL, encoding="utf-8")
    return str(path)


def run_cli(args, capsys):
    code = main(args)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def read_csv(text):
    rows = list(csv.reader(io.StringIO(text)))
    return rows[0], rows[1:]


class TestValidateConfig:
    def test_valid(self, config_path, capsys):
        code, out, _ = run_cli(["validate-config", "--config", config_path], capsys)
        assert code == 0
        assert out.startswith("ok")

    def test_invalid(self, tmp_path, capsys):
        path = tmp_path / "bad.conf"
        path.write_text(MINIMAL + "detector.qpc1.theta = 0.1\n", encoding="utf-8")
        code, _, err = run_cli(["validate-config", "--config", str(path)], capsys)
        assert code == 2
        assert "exactly one of T or theta" in err

    def test_missing_file(self, tmp_path, capsys):
        code, _, err = run_cli(["validate-config", "--config", str(tmp_path / "nope.conf")], capsys)
        assert code == 2


class TestScan:
    def test_gamma_sweep_contextual_values(self, config_path, capsys):
        code, out, _ = run_cli(
            [
                "scan", "--config", config_path,
                "--sweep", "gamma:0:2*pi:9",
                "--quantities", "alpha_D1,alpha_D2",
            ],
            capsys,
        )
        assert code == 0
        header, rows = read_csv(out)
        assert header == ["gamma", "alpha_D1", "alpha_D2"]
        assert len(rows) == 9
        by_gamma = {float(row[0]): row for row in rows}
        quarter = by_gamma[min(by_gamma, key=lambda g: abs(g - math.pi / 2))]
        assert float(quarter[1]) == pytest.approx(-1.0, abs=1e-12)
        assert float(quarter[2]) == pytest.approx(3.0, abs=1e-12)
        # at gamma = 0 and gamma = pi (with phi_d = pi/2) the measurement
        # is completely ambiguous: the sentinel token appears
        assert by_gamma[0.0][1] == "inf-ambiguous"
        mid = by_gamma[min(by_gamma, key=lambda g: abs(g - math.pi))]
        assert mid[1] == "inf-ambiguous"

    def test_erasure_quantities_via_scan(self, config_path, capsys):
        code, out, _ = run_cli(
            [
                "scan", "--config", config_path,
                "--sweep", "phi_s:0:2*pi:33",
                "--quantities", "P_S1,P_S1_given_D1",
            ],
            capsys,
        )
        assert code == 0
        _, rows = read_csv(out)
        p_s1 = np.array([float(r[1]) for r in rows])
        p_cond = np.array([float(r[2]) for r in rows])
        assert p_s1.max() - p_s1.min() < 1e-12  # unconditioned fringe destroyed
        assert p_cond.max() == pytest.approx(1.0, abs=1e-12)
        assert p_cond.min() == pytest.approx(0.0, abs=1e-12)

    def test_sigma_sweep_eta(self, config_path, capsys):
        code, out, _ = run_cli(
            [
                "scan", "--config", config_path,
                "--sweep", "sigma:0:pi:7",
                "--quantities", "eta",
            ],
            capsys,
        )
        assert code == 0
        _, rows = read_csv(out)
        etas = [float(r[1]) for r in rows]
        assert etas[0] == 1.0
        assert etas[-1] == 0.5
        assert all(a > b for a, b in zip(etas, etas[1:]))

    def test_delta_sweep_probabilities(self, config_path, capsys):
        code, out, _ = run_cli(
            [
                "scan", "--config", config_path,
                "--sweep", "delta_s1:-1:1:5",
                "--quantities", "P_D1,P_D2,concurrence",
            ],
            capsys,
        )
        assert code == 0
        _, rows = read_csv(out)
        for row in rows:
            assert float(row[1]) + float(row[2]) == pytest.approx(1.0, abs=1e-12)
        # concurrence peaks for the balanced system QPC (delta_s1 = 0)
        conc = [float(r[3]) for r in rows]
        assert conc[2] == max(conc)

    def test_unknown_quantity(self, config_path, capsys):
        code, _, err = run_cli(
            ["scan", "--config", config_path, "--sweep", "gamma:0:pi:3",
             "--quantities", "P_D7"],
            capsys,
        )
        assert code == 2
        assert "unknown quantity" in err

    def test_unknown_sweep_parameter(self, config_path, capsys):
        code, _, err = run_cli(
            ["scan", "--config", config_path, "--sweep", "voltage:0:1:3",
             "--quantities", "P_D1"],
            capsys,
        )
        assert code == 2

    def test_sweep_domain_checked(self, config_path, capsys):
        code, _, err = run_cli(
            ["scan", "--config", config_path, "--sweep", "gamma:-1:1:3",
             "--quantities", "P_D1"],
            capsys,
        )
        assert code == 2
        assert "domain" in err

    def test_post_selection_impossible_exit_code(self, tmp_path, capsys):
        # deterministic lower system path with an unambiguous strong
        # detector: D1 is perfectly dark, conditioning on it is impossible
        text = MINIMAL.replace("detector.phi = pi/2", "detector.phi = 0")
        text = text.replace("system.qpc1.T = 0.5", "system.qpc1.T = 1.0")
        path = tmp_path / "dark.conf"
        path.write_text(text, encoding="utf-8")
        code, _, err = run_cli(
            ["scan", "--config", str(path), "--sweep", "phi_s:0:pi:3",
             "--quantities", "P_S1_given_D1"],
            capsys,
        )
        assert code == 4
        assert "D1" in err

    def test_byte_identical_reruns(self, config_path, tmp_path, capsys):
        out1 = tmp_path / "a.csv"
        out2 = tmp_path / "b.csv"
        args = ["scan", "--config", config_path, "--sweep", "gamma:0:2*pi:17",
                "--quantities", "P_D1,P_S1,cond_avg_S1,alpha_D1"]
        assert main(args + ["--out", str(out1)]) == 0
        assert main(args + ["--out", str(out2)]) == 0
        assert out1.read_bytes() == out2.read_bytes()


class TestMontecarlo:
    def test_single_event_is_one_contextual_value(self, tmp_path, capsys):
        path = tmp_path / "exp.conf"
        path.write_text(MINIMAL.replace("coupling.gamma = pi", "coupling.gamma = pi/2"),
                        encoding="utf-8")
        code, out, _ = run_cli(
            ["montecarlo", "--config", str(path), "--n", "1", "--seed", "3"],
            capsys,
        )
        assert code == 0
        header, rows = read_csv(out)
        estimate = float(rows[0][header.index("estimate")])
        assert estimate in (pytest.approx(-1.0), pytest.approx(3.0))

    def test_budget_reports_observation_bound(self, tmp_path, capsys):
        text = MINIMAL.replace("detector.phi = pi/2", "detector.phi = 0") + (
            "budget.path_length = 1e-5\n"
            "budget.fermi_velocity = 1e5\n"
            "budget.target_rms = 0.1\n"
        )
        path = tmp_path / "budget.conf"
        path.write_text(text, encoding="utf-8")
        code, out, _ = run_cli(
            ["montecarlo", "--config", str(path), "--n", "100", "--seed", "1"],
            capsys,
        )
        assert code == 0
        header, rows = read_csv(out)
        required = float(rows[0][header.index("required_events")])
        assert required == pytest.approx(200.0, rel=1e-12)
        time_s = float(rows[0][header.index("observation_time_s")])
        assert time_s == pytest.approx(200.0 * 1e-10, rel=1e-12)

    def test_deterministic_given_seed(self, tmp_path, capsys):
        path = tmp_path / "exp.conf"
        path.write_text(MINIMAL.replace("coupling.gamma = pi", "coupling.gamma = pi/2"),
                        encoding="utf-8")
        out1 = tmp_path / "r1.csv"
        out2 = tmp_path / "r2.csv"
        args = ["montecarlo", "--config", str(path), "--n", "500", "--seed", "11"]
        assert main(args + ["--out", str(out1)]) == 0
        assert main(args + ["--out", str(out2)]) == 0
        assert out1.read_bytes() == out2.read_bytes()

    def test_ambiguous_config_exit_code(self, tmp_path, capsys):
        path = tmp_path / "ambiguous.conf"
        path.write_text(MINIMAL.replace("coupling.gamma = pi", "coupling.gamma = 0"),
                        encoding="utf-8")
        code, _, err = run_cli(
            ["montecarlo", "--config", str(path), "--n", "10", "--seed", "1"],
            capsys,
        )
        assert code == 3
        assert "ambiguous" in err.lower()

    def test_fluctuating_coupling_runs(self, tmp_path, capsys):
        text = WEAK_VALUE_CONFIG + "coupling.sigma = pi/4\n"
        path = tmp_path / "fluct.conf"
        path.write_text(text, encoding="utf-8")
        code, out, _ = run_cli(
            ["montecarlo", "--config", str(path), "--n", "2000", "--seed", "5"],
            capsys,
        )
        assert code == 0
        header, rows = read_csv(out)
        assert rows[0][header.index("rng_algorithm")] == "philox4x64"


class TestPovm:
    def test_summary_rows(self, config_path, capsys):
        code, out, _ = run_cli(["povm", "--config", config_path], capsys)
        assert code == 0
        rows = dict((r[0], r[1]) for r in list(csv.reader(io.StringIO(out)))[1:])
        assert float(rows["visibility"]) == pytest.approx(1.0)
        # phi_d = pi/2 at gamma = pi: completely ambiguous
        assert rows["alpha_D1"] == "inf-ambiguous"
        assert float(rows["E_D1_LL"]) + float(rows["E_D2_LL"]) == pytest.approx(1.0, abs=1e-12)

    def test_finite_values(self, tmp_path, capsys):
        path = tmp_path / "exp.conf"
        path.write_text(MINIMAL.replace("detector.phi = pi/2", "detector.phi = 0"),
                        encoding="utf-8")
        code, out, _ = run_cli(["povm", "--config", str(path)], capsys)
        rows = dict((r[0], r[1]) for r in list(csv.reader(io.StringIO(out)))[1:])
        assert float(rows["alpha_D1"]) == pytest.approx(-1.0)
        assert float(rows["alpha_D2"]) == pytest.approx(1.0)


class TestErasure:
    def test_fringe_columns(self, config_path, capsys):
        code, out, _ = run_cli(
            ["erasure", "--config", config_path, "--sweep", "phi_s:0:2*pi:65"],
            capsys,
        )
        assert code == 0
        header, rows = read_csv(out)
        assert header == ["phi_s", "P_S1", "P_S1_given_D1", "P_S1_given_D2"]
        p_s1 = np.array([float(r[1]) for r in rows])
        cond = np.array([float(r[2]) for r in rows])
        anti = np.array([float(r[3]) for r in rows])
        assert p_s1.max() - p_s1.min() < 1e-12
        # complementary fringes: the two conditionals average back to flat
        assert np.max(np.abs((cond + anti) / 2.0 - p_s1)) < 1e-12

    def test_rejects_other_parameters(self, config_path, capsys):
        code, _, err = run_cli(
            ["erasure", "--config", config_path, "--sweep", "gamma:0:1:5"],
            capsys,
        )
        assert code == 2


class TestInteractionPhase:
    def test_reports_target_phase(self, tmp_path, capsys):
        text = MINIMAL + (
            "geometry.interaction_length = 5e-6\n"
            "geometry.channel_separation = 50e-9\n"
            "geometry.screening_length = 100e-9\n"
            "geometry.speed = 1e5\n"
            "geometry.target_gamma = pi\n"
            "bias.voltage = 10e-6\n"
            "bias.fermi_energy = 10e-3\n"
            "bias.temperature = 0.02\n"
        )
        path = tmp_path / "geom.conf"
        path.write_text(text, encoding="utf-8")
        code, out, _ = run_cli(["interaction-phase", "--config", str(path)], capsys)
        assert code == 0
        rows = dict((r[0], r[1]) for r in list(csv.reader(io.StringIO(out)))[1:])
        assert float(rows["coupling_phase"]) == pytest.approx(math.pi, rel=1e-12)
        assert float(rows["dynamical_phase_pair"]) == pytest.approx(
            2.0 * float(rows["dynamical_phase_single"]), rel=1e-12
        )

    def test_requires_geometry(self, config_path, capsys):
        code, _, err = run_cli(["interaction-phase", "--config", config_path], capsys)
        assert code == 2
        assert "geometry" in err
