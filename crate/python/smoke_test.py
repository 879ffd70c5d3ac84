"""Smoke test of the tpflow_py extension module."""

import math
import os
import tempfile

import tpflow_py as tp


def main():
    g = tp.Grid.spectral(1.0, 4, 8, 2 * math.pi)
    params = tp.Params(1.0, 0.5, g.nt)
    f = tp.Field.random(g, 3, seed=1, content="oscillatory")
    u, p = tp.solve_linear(f, params)
    assert u.ncomp == 3 and p.ncomp == 1
    assert tp.lq_norm(u, 1.25) > 0.0
    assert tp.sobolev_norm(u, 1.25) >= tp.lq_norm(u, 1.25)

    mg = tp.Grid.spectral(1.0, 8, 16, 2 * math.pi)
    err = tp.mms("wholespace-linear", mg, tp.Params(1.0, 0.5, mg.nt), seed=3)
    assert err < 1e-10, err

    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "u.tpof")
        u.save(path)
        back = tp.Field.load(path)
        assert back.samples() == u.samples()

    report = tp.audit_embedding(g, 2.0, 0.5, 0.5, calibration=5, fresh=10, seed=2)
    assert report["violations"] == 0.0

    ext = tp.Grid.exterior(2.0, 4, 12, 6.0, 1.0, 2.0)
    zp = tp.Params.fourier(1.0, 0.5, [(0.05, 0.0)], ext.nt, 1.0)
    u, _, rep = tp.solve_nonlinear(tp.Field.zeros(ext, 3), zp, towed=0.25)
    assert rep["residuals"][-1] < 1e-8
    print(f"ok: mms error {err:.2e}, picard iterations {len(rep['residuals'])}")


if __name__ == "__main__":
    main()
