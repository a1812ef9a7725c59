"""Smoke test for the pyelr extension module.

Build and install first, e.g. ``maturin develop -m crates/python/Cargo.toml``
or ``pip install crates/python``, then run ``python python/smoke_test.py``.
"""

import math

import pyelr


def check(cond, what):
    if not cond:
        raise SystemExit(f"FAILED: {what}")
    print(f"ok  {what}")


def main():
    check(abs(pyelr.chisq1_quantile(0.95) - 3.841) < 1e-3, "chi-square quantile at 0.95")

    r = pyelr.el_statistic([1.0, 2.0, 4.0], 2.0)
    expected = 2.0 * (math.log(0.75) + math.log(1.5))
    check(abs(r.statistic - expected) < 1e-12 and r.status == "Interior", "statistic on (1, 2, 4)")
    check(abs(sum(r.weights) - 1.0) < 1e-12, "weights sum to one")

    out = pyelr.el_statistic([1.0, 2.0, 3.0], 5.0)
    check(out.status == "HullViolation" and out.p_value == 0.0, "hull violation")

    lo, hi = pyelr.el_confidence_interval([0.3, 1.2, -0.4, 2.2, 0.9, 1.4], 3.841)
    check(lo < 0.933 < hi, "confidence interval covers the mean")

    d = pyelr.Distribution("Gamma(2, 1)")
    check(str(d) == "gamma(2,1)" and d.moments()[0] == 2.0, "distribution parsing and moments")
    check(len(d.sample(5, seed=1)) == 5, "sampling")
    try:
        pyelr.Distribution("gamma(2,x)")
        check(False, "bad spec rejected")
    except ValueError as e:
        check("x" in str(e), "bad spec rejected")

    check(pyelr.predicted_size("normal(0,1)", 20, 0.05) > 0.05, "predicted size exceeds alpha")

    batch = pyelr.run_batch("exp(1)", 10, replicates=20000, seed=3)
    check(abs(batch.hull_violation_rate - 0.01025) < 0.004, "hull violation rate for exp(1), n=10")

    curve = pyelr.curve_vs_alpha("normal(0,1)", 10, replicates=5000, seed=3)
    check(curve.alpha_hat == sorted(curve.alpha_hat), "vs-level curve is monotone")
    cell = curve.calibrate(0.1)
    check(cell.critical_value is not None and cell.critical_value > 2.706, "calibrated cell")

    kw = dict(n_values=[10, 20], coverages=[0.9, 0.99], replicates=5000, seed=9)
    t1 = pyelr.build_table("chisq(1)", workers=1, **kw)
    t2 = pyelr.build_table("chisq(1)", workers=2, **kw)
    check(t1.to_csv() == t2.to_csv(), "tables identical across worker counts")
    check(pyelr.CalibrationTable.from_csv(t1.to_csv()) == t1, "csv round trip")
    check(t1.critical_values[0][1] is None, "NA cell for chisq(1), n=10, 0.99")
    print("all checks passed")


if __name__ == "__main__":
    main()
