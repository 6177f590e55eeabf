"""The tuple-swap flip, end to end on one instance in each direction.

1. Find an instance with exactly one solution, swap two tuples in the
   constraint that permits it, and confirm the old solution dies while n, d,
   k, m and every permitted-set size stay put.
2. Find an UNSAT instance with a near miss at some constraint, swap so the
   near miss becomes legal, and confirm the result is satisfiable.

    python demos/flip_walkthrough.py
"""
from rblab import RBParams, generate_original, solver
from rblab.core import derive_seed
from rblab.flip import flip_sat_to_unsat, flip_unsat_to_sat, verify_certificate
from rblab.errors import NoFlipPairFound
from rblab.moments import calibrate_r

n, alpha, p = 7, 1.0, 0.5
r, _ = calibrate_r(n, alpha, p)
print(f"calibrated r = {r:.4f} (E[X] = 1/2 at real-valued m)")


def shape(inst):
    return inst.n, inst.d, inst.k, inst.m, sorted({len(c.permitted) for c in inst.constraints})


for i in range(10_000):
    inst = generate_original(RBParams(n, alpha, 2, p, r, derive_seed(0, i)))
    res = solver.solve(inst, solver.Mode.CHECK_UNIQUE)
    if res.count == 1:
        break
sigma = res.witness
after, cert = flip_sat_to_unsat(inst, sigma)
print("\n-- sat -> unsat")
print(f"sample {i}: unique solution {[v + 1 for v in sigma]}")
one = lambda t: tuple(v + 1 for v in t)
print(f"swap in constraint {cert.u + 1}: remove {one(cert.a)}, {one(cert.b)}; "
      f"add {one(cert.crosses()[0])}, {one(cert.crosses()[1])}  (values 1-based)")
print(f"old solution still satisfies? {solver.satisfies_all(after.constraints, sigma)}")
print(f"flipped instance: {solver.solve(after, solver.Mode.COUNT_ALL).count} solutions")
print(f"shape before {shape(inst)}  after {shape(after)}")
print(f"certificate verifies: {verify_certificate(inst, after, cert)}")

print("\n-- unsat -> sat")
done = False
for i in range(10_000):
    inst = generate_original(RBParams(n, alpha, 2, p, r, derive_seed(1, i)))
    if solver.solve(inst).sat:
        continue
    for u in range(inst.m):
        near = solver.find_near_miss(inst, u)
        if near is None:
            continue
        try:
            after, cert = flip_unsat_to_sat(inst, u, near)
        except NoFlipPairFound:
            continue
        print(f"sample {i}: near miss {[v + 1 for v in near]} violates only constraint {u + 1}")
        print(f"after the swap it is a solution: {solver.satisfies_all(after.constraints, near)}")
        print(f"shape before {shape(inst)}  after {shape(after)}")
        done = True
        break
    if done:
        break
