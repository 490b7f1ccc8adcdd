"""Tour of the Hermite algebra layer: multi-indices, products, moments.

Everything downstream (gains, Gram systems, posterior covariances) reduces
to the three identities shown here: orthogonality <H_a, H_b> = delta * a!,
the product linearization H_a H_b = sum_c c H_c, and moment extraction by
reading constant modes.
"""

import numpy as np

import pcebayes as pb
from pcebayes import IndexSet, MultiIndex, PceVector

# A total-degree truncation set: every multi-index with |alpha| <= 3 on two
# germ variables, in graded-lexicographic order.
iset = IndexSet.total_degree(2, 3)
print(f"index set: {iset}")
print("first members:", [a.entries for a in iset.members][:6])

# Products of basis polynomials re-expand in the basis with integer
# structure coefficients.  theta^2 = (theta^2 - 1) + 1 reads as
# h1 * h1 = h2 + h0:
one = MultiIndex((1,))
print("\nh1 * h1 ->", {g.entries: c for g, c in pb.product_linearize(one, one).items()})
print("h1 * h2 ->", {g.entries: c
                     for g, c in pb.product_linearize(one, MultiIndex((2,))).items()})

# A random vector with value dimension 2 on this basis.
rng = np.random.default_rng(1)
x = PceVector(iset, 0.4 * rng.standard_normal((len(iset), 2)))
print("\nmean:", pb.mean(x))
print("covariance:\n", pb.covariance(x, x))

# Fourth symmetric moment, computed exactly through the product algebra
# (no sampling anywhere).  Entry (0,0,1,1) is E[x_0 x_0 x_1 x_1].
m4 = pb.sym_moment(x, 4)
print("\nE[x0^2 x1^2] =", m4[(0, 0, 1, 1)])

# Cross-check by brute Monte Carlo (a fat-tailed estimator; the quadrature
# oracle in the test suite pins the same value to 1e-10):
draws = pb.sample_paths(x, 2_000_000, seed=3)
prod = draws[:, 0] ** 2 * draws[:, 1] ** 2
print(f"Monte Carlo     {prod.mean():.4f} "
      f"(standard error {prod.std() / np.sqrt(prod.size):.3f})")

# Expectations of Hermite products drive every moment formula:
print("\nE[H_(1) H_(1) H_(2)] =",
      pb.hermite_product_expectation([one, one, MultiIndex((2,))]))
