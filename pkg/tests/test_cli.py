"""Command-line interface: exit codes, CSV artifacts, determinism."""

import json

import numpy as np
import pytest

from coherence_lab import (
    ZERO_ENERGY,
    DensityMatrix,
    build_hamiltonian,
    energy,
    identity_channel,
    tensor_power_hamiltonian,
)
from coherence_lab.cli import main
from coherence_lab.serialize import (
    channel_to_json,
    hamiltonian_to_json,
    state_to_json,
    write_json_atomic,
)


def qubit_h():
    return build_hamiltonian([ZERO_ENERGY, energy(u=1)], symbols=("u", "v"))


@pytest.fixture
def workdir(tmp_path):
    h = qubit_h()
    plus = DensityMatrix.pure([1.0, 1.0], h)
    mixed = DensityMatrix.diagonal([0.5, 0.5], h)
    half_h = build_hamiltonian([ZERO_ENERGY, energy(u="1/2")], symbols=("u", "v"))
    half_plus = DensityMatrix.pure([1.0, 1.0], half_h)
    files = {
        "plus": tmp_path / "plus.json",
        "mixed": tmp_path / "mixed.json",
        "half": tmp_path / "half.json",
        "identity2": tmp_path / "identity2.json",
        "valuation": tmp_path / "val.json",
        "ham": tmp_path / "ham.json",
    }
    write_json_atomic(str(files["plus"]), state_to_json(plus))
    write_json_atomic(str(files["mixed"]), state_to_json(mixed))
    write_json_atomic(str(files["half"]), state_to_json(half_plus))
    h2 = tensor_power_hamiltonian(h, 2)
    write_json_atomic(str(files["identity2"]), channel_to_json(identity_channel(h2)))
    write_json_atomic(str(files["valuation"]), {"u": 1.0, "v": np.sqrt(2.0)})
    ladder = build_hamiltonian(
        [ZERO_ENERGY, energy(u=1), energy(v=1), energy(u=1, v=1)], symbols=("u", "v")
    )
    write_json_atomic(str(files["ham"]), hamiltonian_to_json(ladder))
    files["dir"] = tmp_path
    return files


class TestModes:
    def test_lists_generators(self, workdir, capsys):
        assert main(["modes", str(workdir["plus"])]) == 0
        out = capsys.readouterr().out
        assert "mode: 1 u" in out
        assert "mode: -1 u" in out
        assert "mode: 0" in out

    def test_missing_file(self, workdir, capsys):
        assert main(["modes", str(workdir["dir"] / "nope.json")]) == 2
        assert "error" in capsys.readouterr().err


class TestCheckSubset:
    def test_z_subset_holds(self, workdir):
        assert (
            main(
                [
                    "check-subset",
                    "--variant",
                    "z",
                    str(workdir["mixed"]),
                    str(workdir["plus"]),
                ]
            )
            == 0
        )

    def test_z_subset_fails_for_half_mode(self, workdir):
        assert (
            main(
                [
                    "check-subset",
                    "--variant",
                    "z",
                    str(workdir["half"]),
                    str(workdir["plus"]),
                ]
            )
            == 1
        )

    def test_q_subset_holds_for_half_mode(self, workdir):
        assert (
            main(
                [
                    "check-subset",
                    "--variant",
                    "q",
                    str(workdir["half"]),
                    str(workdir["plus"]),
                ]
            )
            == 0
        )


class TestCovariance:
    def test_identity_channel_passes(self, workdir, capsys):
        assert main(["covariance", str(workdir["identity2"])]) == 0
        assert "commutator norm: 0.0" in capsys.readouterr().out

    def test_explicit_valuation(self, workdir):
        assert (
            main(
                [
                    "covariance",
                    str(workdir["identity2"]),
                    "--valuation",
                    str(workdir["valuation"]),
                ]
            )
            == 0
        )

    def test_impossible_tolerance_fails(self, workdir):
        assert main(["covariance", str(workdir["identity2"]), "--tol", "-1"]) == 2

    def test_tolerance_violation_exits_one(self, workdir):
        from coherence_lab import LadderSpec, ladder_product, random_covariant

        # Energies with 1 + sqrt(2) sums leave float-level commutator residue,
        # which a (deliberately absurd) 1e-30 tolerance flags.
        product = ladder_product(
            [LadderSpec(energy(u=1), 0, 1), LadderSpec(energy(v=1), 0, 1)]
        )
        noisy = random_covariant(product, 2, seed=4)
        path = workdir["dir"] / "noisy.json"
        write_json_atomic(str(path), channel_to_json(noisy))
        assert (
            main(
                [
                    "covariance",
                    str(path),
                    "--valuation",
                    str(workdir["valuation"]),
                    "--tol",
                    "1e-30",
                ]
            )
            == 1
        )


class TestVerdict:
    def test_amplifiable(self, workdir, capsys):
        assert main(["verdict", str(workdir["plus"]), str(workdir["mixed"])]) == 0
        assert "AMPLIFIABLE" in capsys.readouterr().out

    def test_blocked_q(self, workdir, capsys):
        assert main(["verdict", str(workdir["mixed"]), str(workdir["plus"])]) == 0
        assert "BLOCKED_Q" in capsys.readouterr().out

    def test_blocked_z(self, workdir, capsys):
        assert main(["verdict", str(workdir["plus"]), str(workdir["half"])]) == 0
        assert "BLOCKED_Z" in capsys.readouterr().out


class TestEmbed:
    def test_prints_basis_and_coordinates(self, workdir, capsys):
        assert main(["embed", str(workdir["ham"])]) == 0
        out = capsys.readouterr().out
        assert "basis[0]: 1 u" in out
        assert "basis[1]: 1 v" in out
        assert "level 3: 1 u + 1 v -> (1, 1)" in out

    def test_truncation_overflow_is_violation(self, workdir, capsys):
        big = build_hamiltonian([ZERO_ENERGY, energy(u=1), energy(u=7)], symbols=("u",))
        path = workdir["dir"] / "big.json"
        write_json_atomic(str(path), hamiltonian_to_json(big))
        assert main(["embed", str(path), "--truncation", "0:2"]) == 1

    def test_bad_truncation_is_usage_error(self, workdir):
        assert main(["embed", str(workdir["ham"]), "--truncation", "wide"]) == 2


class TestCounterexample:
    def test_stdout_row_matches_formula(self, workdir, capsys):
        assert main(["counterexample", "--m", "2", "--eps", "0.2", "--delta", "0.01"]) == 0
        out = capsys.readouterr().out
        lines = [l for l in out.splitlines() if l and not l.startswith("#")]
        header = lines[0].split(",")
        assert header == [
            "m",
            "eps",
            "delta",
            "marginal_dist",
            "correlation",
            "global_dist",
            "f_formula",
        ]
        row = dict(zip(header, lines[2].split(",")))
        assert row["m"] == "2"
        assert float(row["global_dist"]) == pytest.approx(0.3862, abs=1e-9)
        assert float(row["f_formula"]) == pytest.approx(0.3862, abs=1e-12)

    def test_csv_and_plot_artifacts(self, workdir):
        csv_path = workdir["dir"] / "ce.csv"
        png_path = workdir["dir"] / "ce.png"
        code = main(
            [
                "counterexample",
                "--m",
                "4",
                "--eps",
                "0.1",
                "--delta",
                "0.05",
                "--csv",
                str(csv_path),
                "--plot",
                str(png_path),
            ]
        )
        assert code == 0
        text = csv_path.read_text()
        assert text.startswith("# command=counterexample")
        assert len(text.splitlines()) == 2 + 4
        assert png_path.stat().st_size > 1000

    def test_byte_identical_reruns(self, workdir):
        a = workdir["dir"] / "a.csv"
        b = workdir["dir"] / "b.csv"
        for path in (a, b):
            main(
                [
                    "counterexample",
                    "--m",
                    "3",
                    "--eps",
                    "0.2",
                    "--delta",
                    "0.01",
                    "--csv",
                    str(path),
                ]
            )
        assert a.read_bytes() == b.read_bytes()


class TestSchedule:
    def test_four_conversions(self, workdir, capsys):
        assert main(["schedule", "--N", "2", "--k", "1"]) == 0
        out = capsys.readouterr().out
        records = [
            l
            for l in out.splitlines()
            if l and not l.startswith("#") and not l.startswith("conversions")
        ]
        assert records[0] == "round,group,role_1,role_2"
        assert len(records) - 1 == 4
        assert "conversions: 4 (expected 4), fresh: True" in out

    def test_csv_artifact(self, workdir):
        path = workdir["dir"] / "sched.csv"
        assert main(["schedule", "--N", "3", "--k", "2", "--csv", str(path)]) == 0
        lines = path.read_text().splitlines()
        assert len(lines) == 2 + 27


class TestMeasures:
    def test_prints_three_values(self, workdir, capsys):
        code = main(
            [
                "measures",
                str(workdir["plus"]),
                "--valuation",
                str(workdir["valuation"]),
            ]
        )
        assert code == 0
        out = capsys.readouterr().out
        values = dict(
            line.split(": ") for line in out.splitlines() if ": " in line
        )
        assert float(values["qfi"]) == pytest.approx(1.0, abs=1e-10)
        assert float(values["wy_skew"]) == pytest.approx(0.25, abs=1e-10)
        assert float(values["rel_ent_asym"]) == pytest.approx(np.log(2), abs=1e-10)

    def test_sweep_requires_seed(self, workdir, capsys):
        code = main(
            [
                "measures",
                str(workdir["plus"]),
                "--valuation",
                str(workdir["valuation"]),
                "--sweep",
                "2",
            ]
        )
        assert code == 2
        assert "seed" in capsys.readouterr().err

    def test_sweep_deterministic(self, workdir):
        a = workdir["dir"] / "ma.csv"
        b = workdir["dir"] / "mb.csv"
        for path in (a, b):
            code = main(
                [
                    "measures",
                    str(workdir["plus"]),
                    "--valuation",
                    str(workdir["valuation"]),
                    "--sweep",
                    "3",
                    "--seed",
                    "5",
                    "--csv",
                    str(path),
                ]
            )
            assert code == 0
        assert a.read_bytes() == b.read_bytes()
        text = a.read_text()
        assert text.startswith("# command=measures seed=5")
        assert "np.float64" not in text


class TestCatalyst:
    def test_build_writes_bundle(self, workdir, capsys):
        out = workdir["dir"] / "bundle.json"
        code = main(
            [
                "catalyst",
                "build",
                "--n",
                "2",
                "--state",
                str(workdir["plus"]),
                "--channel",
                str(workdir["identity2"]),
                "--out",
                str(out),
            ]
        )
        assert code == 0
        bundle = json.loads(out.read_text())
        assert bundle["register_dim"] == 2
        assert bundle["catalyst_restore_deviation"] <= 1e-12
        assert bundle["system_marginal_deviation"] <= 1e-12
        assert bundle["catalyst"]["dim"] == 4

    def test_wrong_n_is_usage_error(self, workdir):
        code = main(
            [
                "catalyst",
                "build",
                "--n",
                "3",
                "--state",
                str(workdir["plus"]),
                "--channel",
                str(workdir["identity2"]),
            ]
        )
        assert code == 2


class TestUsage:
    def test_unknown_command(self):
        with pytest.raises(SystemExit) as err:
            main(["frobnicate"])
        assert err.value.code == 2

    def test_version(self, capsys):
        with pytest.raises(SystemExit) as err:
            main(["--version"])
        assert err.value.code == 0
