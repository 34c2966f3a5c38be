"""Print the norm capability table and show how plans get selected.

For each polynomial order m on the supported grid there is a largest
one-norm the truncated expansion can absorb while staying at the
precision's roundoff level.  The integrator picks the smallest m whose
capability covers the requested spectral span; past the top of the grid
it refuses rather than silently losing accuracy.

Run:  python3 demos/capability_table.py
"""

import numpy as np

from sliceprop import (
    ORDER_GRID,
    Precision,
    StepTooLargeError,
    chebyshev_error,
    format_capability,
    make_plan,
    norm_capability,
    select_m_max,
)

# --- the table -----------------------------------------------------------

print("largest admissible ||G||_1 per order")
print(f"{'m':>3}  {'fp32':>8}  {'fp64':>8}")
for m in ORDER_GRID:
    row32 = format_capability(norm_capability(m, Precision.FP32))
    row64 = format_capability(norm_capability(m, Precision.FP64))
    print(f"{m:>3}  {row32:>8}  {row64:>8}")

# --- selection -----------------------------------------------------------

# walk a few norms through the selector and show the resulting plan
print("\nplan selection at sample norms (fp64)")
print(f"{'||G||_1':>8}  {'m_max':>5}  {'predicted error':>16}")
for bound in (0.001, 0.1, 0.5, 1.5, 4.0):
    m = select_m_max(bound, Precision.FP64)
    plan = make_plan(-bound, bound, Precision.FP64)
    print(f"{bound:>8.3f}  {m:>5}  {plan.predicted_error:>16.3e}")

# the a-priori error model behind the table: decay is superexponential
# in m once the span fits, so one extra order buys orders of magnitude
print("\ntruncation estimate vs order at span 2.0")
for m in ORDER_GRID[:6]:
    print(f"  m={m:<2}  eps={chebyshev_error(m, 2.0):.3e}")

# beyond the top of the grid the selector raises instead of extrapolating
try:
    select_m_max(50.0, Precision.FP64)
except StepTooLargeError as exc:
    print(f"\nnorm 50.0 is off the grid: {exc}")

# capability shrinks with precision: the same norm needs a higher order
# in fp64 than fp32 because the series must reach a deeper floor
bound = 1.0
m32 = select_m_max(bound, Precision.FP32)
m64 = select_m_max(bound, Precision.FP64)
print(f"\nnorm {bound}: fp32 takes m={m32}, fp64 takes m={m64}")
assert m64 >= m32

# sanity: every tabulated capability really does meet its own floor
for precision in (Precision.FP32, Precision.FP64):
    for m in ORDER_GRID:
        cap = norm_capability(m, precision)
        assert chebyshev_error(m, 2 * cap) <= precision.roundoff * 1.0001
print("all capabilities verified against the error model")
