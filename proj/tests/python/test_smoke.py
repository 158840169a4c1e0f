import math
import os
import sys

try:
    import _idsm as idsm
except ImportError:  # installed as a package
    import idsm


def test_disk_mesh_geometry():
    mesh = idsm.build_disk_mesh(2000)
    assert abs(mesh.triangle_count - 2000) <= 500
    assert abs(mesh.total_area() - math.pi) < 0.05
    for b in mesh.boundary_nodes:
        x, y = mesh.nodes[b]
        assert abs(math.hypot(x, y) - 1.0) < 1e-9


def test_partition_and_trace():
    mesh = idsm.build_disk_mesh(800)
    part = idsm.partition_boundary(mesh, [(-math.pi / 2, math.pi / 2)])
    labels = part.node_labels
    assert set(labels) == {"D", "N"}
    problem = idsm.make_problem("dot")
    u = idsm.rasterize([], mesh, len(problem.types))
    flux = idsm.sample_flux(mesh, "sin(4*pi*x1)+0.5")
    y = idsm.solve_forward(problem, mesh, u, flux)
    tr_d = idsm.trace_part(mesh, part, y, idsm.TracePart.D)
    tr_n = idsm.trace_part(mesh, part, y, idsm.TracePart.N)
    tr = idsm.trace_part(mesh, part, y, idsm.TracePart.full)
    assert max(abs(a + b - c) for a, b, c in zip(tr_d, tr_n, tr)) == 0.0


def test_forward_solver_matches_models():
    mesh = idsm.build_disk_mesh(600)
    dot = idsm.make_problem("dot")
    mod = idsm.make_problem("modulus")
    flux = idsm.sample_flux(mesh, "x1^2")
    y_dot = idsm.solve_forward(dot, mesh, idsm.rasterize([], mesh, 2), flux)
    y_mod = idsm.solve_forward(mod, mesh, idsm.rasterize([], mesh, 1), flux)
    diff = max(abs(a - b) for a, b in zip(y_dot, y_mod))
    assert diff < 1e-9


def test_small_reconstruction_invariants():
    mesh = idsm.build_disk_mesh(700)
    coarse = idsm.build_disk_mesh(100)
    cmap = idsm.build_coarse_map(mesh, coarse)
    part = idsm.partition_boundary(mesh, [(-math.pi / 2, math.pi / 2)])
    problem = idsm.make_problem("eit")

    data_mesh = idsm.refine_uniform(mesh)
    u_star = idsm.rasterize([idsm.make_disk(0, -0.9, 0.4, 0.0, 0.2)], data_mesh, 1)
    ds = idsm.Dataset()
    ds.flux = idsm.sample_flux(mesh, "sin(4*pi*x1)+0.5")
    ds.y_d = idsm.synthesize_data(
        problem, data_mesh, u_star, idsm.sample_flux(data_mesh, "sin(4*pi*x1)+0.5"),
        mesh, part, 0.15, 7,
    )

    opt = idsm.ReconstructionOptions()
    opt.max_iter = 4
    opt.probe_count = 5
    run = idsm.run_reconstruction(problem, mesh, cmap, part, [ds], opt)

    assert run.solves_per_pair == idsm.expected_solves(problem, 4)
    assert len(run.records) == 5
    first_update = True
    box = problem.types[0]
    for rec in run.records:
        u = rec.u.components[0]
        assert u.min() >= box.lo and u.max() <= box.hi
        if 1 <= rec.k <= 3:
            assert rec.update_applied
            assert rec.pairing > 0.0
            assert rec.secant_error <= 1e-10
            assert rec.lambda_ >= 0.0
            assert rec.probe_max_ratio <= 1.0 + 1e-12
            if first_update:
                assert rec.lambda_ == 1.0
                first_update = False


def test_config_driven_run(tmp_path):
    cfg_text = """
[problem]
model = eit
[mesh]
fine = 700
coarse = 100
[boundary]
arcs = -1.5707963267948966:1.5707963267948966
[fluxes]
f1 = sin(4*pi*x1)+0.5
[hrdtn]
alpha_d = 0.05
alpha_n = 2.0
[resolver]
p = 2.0
scheme = bfg
eps_band = 0.1
[run]
max_iter = 2
noise = 0.1
seed = 3
[truth]
shape = disk conductivity -0.9 0.4 0.0 0.2
"""
    path = tmp_path / "run.cfg"
    path.write_text(cfg_text)
    cfg = idsm.load_config(str(path))
    run = idsm.run_from_config(cfg)
    assert run.solves_per_pair == 9  # 5*2 - 1
