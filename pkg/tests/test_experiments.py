import math

import numpy as np
import pytest

import subdiff as sd
from subdiff import cli
from subdiff import experiments as xp


class TestHelpers:
    def test_cells_for_h(self):
        assert xp.cells_for_h(0.0, math.pi, 1e-3) == 3142
        assert xp.cells_for_h(0.0, 1.0, 0.25) == 4

    def test_eval_index_off_grid(self):
        rows_kw = dict(alphas=[0.5], thetas=[0.1], taus=[0.3], ncells=16)
        with pytest.raises(ValueError):
            xp.run_convergence("ex1", **rows_kw)

    def test_unknown_example(self):
        with pytest.raises(ValueError):
            xp.example_def("ex9")


class TestParseTaus:
    def test_exponent_range(self):
        taus = cli.parse_taus("2^-5..2^-9")
        assert taus == [2.0 ** -k for k in range(5, 10)]

    def test_comma_tokens(self):
        assert cli.parse_taus("2^-5,2^-7") == [2.0 ** -5, 2.0 ** -7]

    def test_plain_floats(self):
        assert cli.parse_taus("0.5,0.25") == [0.5, 0.25]


class TestDeterminism:
    def test_convergence_rows_are_reproducible(self):
        kw = dict(alphas=[0.5], thetas=[0.3], taus=[2 ** -4, 2 ** -5],
                  ncells=64)
        a = xp.rate_rows_to_csv(xp.run_convergence("ex1", **kw))
        b = xp.rate_rows_to_csv(xp.run_convergence("ex1", **kw))
        assert a == b

    def test_rate_column_consistent_with_errors(self):
        rows = xp.run_convergence("ex1", [0.5], [0.5],
                                  [2 ** -4, 2 ** -5, 2 ** -6], 64)
        csv = xp.rate_rows_to_csv(rows)
        lines = csv.strip().split("\n")[1:]
        parsed = [line.split(",") for line in lines]
        errs = [float(p[3]) for p in parsed]
        for i, p in enumerate(parsed):
            if i == 0:
                assert p[4] == ""
            else:
                assert float(p[4]) == pytest.approx(
                    math.log2(errs[i - 1] / errs[i]), abs=0)

    def test_stability_series_reproducible(self):
        a = xp.run_stability(0.499, tau=2 ** -5, t_final=1.0, ncells=32)
        b = xp.run_stability(0.499, tau=2 ** -5, t_final=1.0, ncells=32)
        np.testing.assert_array_equal(a.probe_series, b.probe_series)

    def test_threaded_sweep_matches_serial(self):
        kw = dict(alphas=[0.3, 0.7], thetas=[0.2, 0.4],
                  taus=[2 ** -4, 2 ** -5], ncells=48)
        serial = xp.run_convergence("ex2i", **kw, workers=1)
        threaded = xp.run_convergence("ex2i", **kw, workers=3)
        assert serial == threaded


class TestReferenceRuns:
    def test_reference_strictly_finer(self, monkeypatch):
        captured = {}
        orig = xp._reference_solution

        def spy(ex, alpha, ncells, tau_ref, t_final, t_eval, theta_ref=0.3):
            captured.update(ncells=ncells, tau_ref=tau_ref)
            return orig(ex, alpha, ncells, tau_ref, t_final, t_eval, theta_ref)

        monkeypatch.setattr(xp, "_reference_solution", spy)
        taus = [2 ** -3, 2 ** -4]
        xp.run_convergence("ex2ii", [0.5], [0.3], taus, 64)
        assert captured["tau_ref"] == min(taus) / 8
        assert captured["ncells"] == 64  # doubled inside the builder

    def test_reference_mesh_is_doubled(self, monkeypatch):
        seen = {}
        orig = xp.build_problem

        def spy(example, alpha, theta, tau, n_steps, ncells, *a, **kw):
            seen.setdefault("cells", []).append(ncells)
            return orig(example, alpha, theta, tau, n_steps, ncells, *a, **kw)

        monkeypatch.setattr(xp, "build_problem", spy)
        xp.run_convergence("ex2ii", [0.5], [0.3], [2 ** -3, 2 ** -4], 64)
        assert max(seen["cells"]) == 128
        assert seen["cells"].count(64) >= 2


class TestCli:
    def run(self, tmp_path, *argv):
        out = tmp_path / "out.csv"
        rc = cli.main(list(argv) + ["--out", str(out)])
        return rc, out.read_text() if out.exists() else ""

    def test_weights_csv(self, tmp_path):
        rc, text = self.run(tmp_path, "weights", "--alpha", "0.5",
                            "--theta", "0.25", "--count", "2")
        assert rc == 0
        assert text == "k,omega\n0,1\n1,-0.5\n2,-0.125\n"

    def test_weights_fbdf2_kind(self, tmp_path):
        rc, text = self.run(tmp_path, "weights", "--alpha", "1.0",
                            "--count", "2", "--kind", "fbdf2")
        assert rc == 0
        assert text.splitlines()[1:] == ["0,1.5", "1,-2", "2,0.5"]

    def test_solve_series_columns(self, tmp_path):
        rc, text = self.run(tmp_path, "solve", "--problem", "ex1",
                            "--alpha", "0.5", "--theta", "0.3",
                            "--nsteps", "8", "--ncells", "32")
        assert rc == 0
        lines = text.splitlines()
        assert lines[0] == "t,error"
        assert len(lines) == 10

    def test_solve_ex3_emits_linf(self, tmp_path):
        rc, text = self.run(tmp_path, "solve", "--problem", "ex3",
                            "--alpha", "0.8", "--theta", "0.4",
                            "--nsteps", "8", "--ncells", "32")
        assert rc == 0
        assert text.splitlines()[0] == "t,linf_norm"

    def test_convergence_csv_shape(self, tmp_path):
        rc, text = self.run(tmp_path, "convergence", "--example", "ex1",
                            "--alphas", "0.5", "--thetas", "0.5",
                            "--taus", "2^-4..2^-5", "--ncells", "32")
        assert rc == 0
        lines = text.splitlines()
        assert lines[0] == "alpha,theta,tau,error,rate"
        assert len(lines) == 3

    def test_convergence_byte_identical(self, tmp_path):
        args = ("convergence", "--example", "ex2i", "--alphas", "0.3",
                "--thetas", "0.2", "--taus", "2^-3..2^-4", "--ncells", "24")
        _, a = self.run(tmp_path, *args)
        _, b = self.run(tmp_path, *args)
        assert a == b

    def test_fastcheck_csv(self, tmp_path):
        rc, text = self.run(tmp_path, "fastcheck", "--alpha", "0.5",
                            "--theta", "0.25", "--nmin", "50",
                            "--nmax", "52")
        assert rc == 0
        lines = text.splitlines()
        assert lines[0] == "n,exact,fast,abs_error"
        for line in lines[1:]:
            assert float(line.split(",")[3]) < 1e-10

    def test_bench_csv(self, tmp_path):
        rc, text = self.run(tmp_path, "bench", "--history", "fast1",
                            "--nsteps", "128,256", "--ncells", "17")
        assert rc == 0
        lines = text.splitlines()
        assert lines[0] == "n_steps,wall_seconds,history_entries_peak"
        assert len(lines) == 3

    def test_bench_numpy_backend_flag(self, tmp_path):
        rc, text = self.run(tmp_path, "bench", "--history", "standard",
                            "--nsteps", "64", "--ncells", "9",
                            "--backend", "numpy")
        assert rc == 0
        assert sd.backend_name() in ("numba", "numpy")

    def test_failed_cell_gives_nonzero_exit(self, tmp_path, capsys):
        rc, _ = self.run(tmp_path, "convergence", "--example", "ex1",
                         "--alphas", "0.5", "--thetas", "0.3",
                         "--taus", "0.3,0.15", "--ncells", "16")
        assert rc != 0
        assert "error:" in capsys.readouterr().err


class TestExample2Series:
    def test_case_i_bundle_and_prefactor(self):
        rows, series = xp.run_example2("i", [0.5], [0.1],
                                       [2 ** -8, 2 ** -9], 500)
        assert len(rows) == 2
        s = series[(0.5, 0.1)]
        mask = (s[:, 0] >= 1e-2) & (s[:, 0] <= 1e-1)
        slope = np.polyfit(np.log(s[mask, 0]), np.log(s[mask, 1]), 1)[0]
        assert slope == pytest.approx(0.5 - 2.0, abs=0.3)

    def test_case_ii_prefactor_is_alpha_independent(self):
        # nonsmooth datum: the error decays like t**-2 regardless of alpha;
        # fit past the first dozen steps where the startup transient sits
        for alpha in (0.3, 0.8):
            s = xp.series_vs_reference(alpha, 0.3, 2 ** 9, 500)
            mask = (s[:, 0] >= 3e-2) & (s[:, 0] <= 3e-1)
            slope = np.polyfit(np.log(s[mask, 0]), np.log(s[mask, 1]), 1)[0]
            assert slope == pytest.approx(-2.0, abs=0.4)


class TestExampleDrivers:
    def test_example1_wrapper_scheme_switch(self):
        taus = [2 ** -4, 2 ** -5]
        corrected = xp.run_example1([0.5], [0.2], taus, 64)
        plain = xp.run_example1([0.5], [0.2], taus, 64, corrected=False)
        # the first-step correction removes the dominant singular error term
        assert corrected[-1].error < plain[-1].error / 10

    def test_example3_bundle(self):
        reports, rows = xp.run_example3(alphas=[0.5], thetas=[0.1],
                                        taus=[2 ** -4, 2 ** -5], ncells=64)
        assert [r.flagged_unstable for r in reports] == [True, False]
        assert len(rows) == 2 and all(r.error > 0 for r in rows)

    def test_example4_uses_combined_weights(self):
        rows = xp.run_example4([0.5], [0.5], [2 ** -4, 2 ** -5], 64)
        # the half-shift combined scheme converges at roughly order alpha
        assert rows[-1].rate == pytest.approx(0.5, abs=0.15)


class TestLoadSamplerInterface:
    def test_sampler_and_table_agree(self):
        mesh = sd.Mesh1D(0.0, math.pi, 24)
        system = sd.SpatialSystem.fem(sd.assemble_mass(mesh),
                                      sd.assemble_stiffness(mesh))
        v = sd.ritz_project(mesh, np.sin, laplacian=lambda x: -np.sin(x))
        params = sd.SchemeParams(0.5, 0.3, 0.25, 4)
        space = sd.load_vector(mesh, np.sin)
        M = system.mass
        proj = sd.thomas_solve(M, space)

        def sampler(t):
            return (1.0 + t) * proj

        table = np.outer(1.0 + params.times(), space)
        h1 = sd.solve(sd.DiscreteProblem(system=system, v_h=v, params=params,
                                         f_sampler=sampler))
        h2 = sd.solve(sd.DiscreteProblem(system=system, v_h=v, params=params,
                                         load_table=table))
        np.testing.assert_allclose(h1.levels, h2.levels, rtol=0, atol=1e-12)
