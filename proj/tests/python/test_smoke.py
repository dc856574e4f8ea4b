"""End-to-end smoke checks for the stfem extension module."""

import math

import pytest

import stfem


def test_version():
    assert stfem.__version__ == "0.1.0"


def test_mesh_basics():
    mesh = stfem.box_mesh(1, [(0.0, 1.0), (0.0, 1.0)], [2, 2])
    assert mesh.dim == 2
    assert mesh.num_vertices == 9
    assert mesh.num_elements == 8
    assert math.isclose(mesh.total_volume, 1.0, rel_tol=1e-12)

    audit = stfem.audit_mesh(mesh)
    assert audit.ok()
    assert audit.n_bottom == 2 and audit.n_top == 2

    fine = stfem.refine_uniform(mesh)
    assert fine.num_elements == 2 * mesh.num_elements
    assert stfem.audit_mesh(fine).ok()
    assert len(fine.parents()) == fine.num_elements

    with pytest.raises(ValueError):
        stfem.box_mesh(3, [(0.0, 1.0)], [1])


def test_mesh_file_roundtrip(tmp_path):
    mesh = stfem.box_mesh(1, [(0.0, 2.0), (0.0, 1.0)], [3, 2])
    path = str(tmp_path / "grid.mesh")
    stfem.write_mesh(path, mesh)
    back = stfem.read_mesh(path)
    assert back.num_vertices == mesh.num_vertices
    assert back.num_elements == mesh.num_elements
    assert math.isclose(back.total_volume, mesh.total_volume, rel_tol=1e-14)


def test_solve_pipeline_and_majorant():
    bench = stfem.make_benchmark("smooth_sine", 1, 1)
    assert bench.has_exact
    mesh = stfem.make_mesh(bench, [6, 6])
    space = stfem.FESpace(mesh, 1)
    assert space.n_free < space.n_total

    stab = stfem.compute_stabilization(space, bench)
    assert len(stab.theta) == mesh.num_elements
    assert min(stab.theta) > 0.0

    system = stfem.assemble(space, bench, stab)
    assert system.n == space.n_total

    cfg = stfem.SolverConfig()
    cfg.rel_tol = 1e-12
    u, report = stfem.gmres(system, cfg)
    assert report.converged
    assert len(u) == space.n_total

    err = stfem.energy_error(space, bench, stab, u)
    zero = stfem.energy_error(space, bench, stab, [0.0] * space.n_total)
    assert 0.0 < err.norm_h() < 0.5 * zero.norm_h()

    eta = stfem.residual_indicator(space, bench, u)
    assert len(eta.eta) == mesh.num_elements
    assert eta.total() > 0.0

    flux = stfem.recover_flux(space, bench, u)
    beta = stfem.optimize_beta(space, bench, u, flux)
    flux = stfem.improve_flux(space, bench, u, beta, flux)
    beta = stfem.optimize_beta(space, bench, u, flux)
    maj = stfem.majorant(space, bench, u, flux, beta)
    para = stfem.parabolic_error(space, bench, u)
    assert maj.value() >= para > 0.0

    ieff = stfem.efficiency_index(stfem.functional_indicator(space, bench, u, flux),
                                  para)
    assert ieff is not None and ieff > 0.0


def test_doerfler_marking():
    bench = stfem.make_benchmark("smooth_sine", 1, 1)
    mesh = stfem.make_mesh(bench, [4, 4])
    space = stfem.FESpace(mesh, 1)
    stab = stfem.compute_stabilization(space, bench)
    system = stfem.assemble(space, bench, stab)
    u, report = stfem.gmres(system)
    assert report.converged

    eta = stfem.residual_indicator(space, bench, u)
    marks = stfem.doerfler_mark(eta, 0.3)
    assert marks == sorted(marks)
    assert 0 < len(marks) <= mesh.num_elements
    marked_sq = sum(eta.eta[k] ** 2 for k in marks)
    assert marked_sq >= 0.3 * sum(e * e for e in eta.eta) - 1e-12

    fine = stfem.refine_marked(mesh, marks)
    assert fine.num_elements > mesh.num_elements
    coarse_space = space
    fine_space = stfem.FESpace(fine, 1)
    v = stfem.transfer_solution(coarse_space, fine_space, u)
    assert len(v) == fine_space.n_total


def test_adaptive_loop_records():
    bench = stfem.make_benchmark("smooth_sine", 1, 1)
    cfg = stfem.AdaptConfig()
    cfg.mode = stfem.RefinementMode.UNIFORM
    cfg.estimator = stfem.IndicatorKind.FUNCTIONAL
    cfg.max_levels = 3
    result = stfem.adaptive_loop(bench, 1, cfg, [3, 3])
    assert not result.aborted
    assert len(result.records) == 3

    dofs = [r.dofs for r in result.records]
    assert dofs == sorted(dofs) and dofs[0] < dofs[-1]
    for rec in result.records:
        assert rec.h_err is not None and rec.majorant is not None
        assert rec.majorant >= rec.para_err
    assert result.records[-1].h_err < result.records[0].h_err


def test_run_config_and_csv(tmp_path):
    outdir = tmp_path / "study"
    text = "\n".join([
        "benchmark = polynomial_patch",
        "d = 1",
        "p = 2",
        "refine.mode = uniform",
        "refine.max_levels = 2",
        "estimator.kind = functional",
        "mesh.subdivisions = 2 2",
        "solver.rel_tol = 1e-13",
        f"output.dir = {outdir}",
        "",
    ])
    cfg = stfem.parse_run_config(text)
    assert cfg.degree == 2
    assert stfem.run(cfg) == 0

    records = stfem.read_csv(str(outdir / "errors.csv"))
    assert len(records) == 2
    assert all(r.h_err < 1e-8 for r in records)
    assert (outdir / "summary").exists()

    copy = tmp_path / "copy.csv"
    stfem.write_csv(str(copy), records)
    again = stfem.read_csv(str(copy))
    assert [r.dofs for r in again] == [r.dofs for r in records]

    with pytest.raises(ValueError):
        stfem.parse_run_config("benchmark = polynomial_patch\nrefine.bulk = 2.0\n")


def test_vtk_export(tmp_path):
    mesh = stfem.box_mesh(1, [(0.0, 1.0), (0.0, 1.0)], [2, 2])
    space = stfem.FESpace(mesh, 1)
    coeffs = space.interpolate(lambda x: x[0] + x[1])
    values = stfem.vertex_values(space, coeffs)
    assert len(values) == mesh.num_vertices

    path = tmp_path / "mesh.vtk"
    stfem.write_vtk(str(path), mesh, vertex_solution=values)
    body = path.read_text()
    assert body.startswith("# vtk DataFile Version 3.0")
    assert "POINT_DATA 9" in body
