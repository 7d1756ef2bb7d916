"""Rate equations against the full master equation.

The rate equations follow from eliminating the internal state at second
order in the Lamb-Dicke parameter.  Solving the full internal-plus-motional
Liouvillian for a small square well shows the residual shrinking roughly as
eta^2, and the eigenmodes of that Liouvillian reproduce the predicted
sideband positions and widths.

    python3 demos/oracle_check.py
"""

from sideband.oracle import verify_oracle

rep = verify_oracle()
print("eta     l1 error of rate-equation populations")
for eta, err in zip(rep["eta_values"], rep["population_l1_errors"]):
    print(f"{eta:5.2f}   {err:.3e}")
print(f"observed order {rep['observed_order']:.2f}")
print(f"peak position errors (units of gamma_nm): max {max(rep['peak_position_errors']):.2e}")
print(f"width errors (relative): max {max(rep['width_errors']):.2e}")
print("passed" if rep["passed"] else "FAILED")
