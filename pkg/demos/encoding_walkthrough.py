"""Log-encode a CSP instance to CNF, solve it with the bundled DPLL, and
decode the model back into a CSP assignment.

    python demos/encoding_walkthrough.py [--out formula.cnf]
"""
import argparse
import io

from rblab import RBParams, generate_original, satenc, solver

ap = argparse.ArgumentParser()
ap.add_argument("--out", help="also write the DIMACS file here")
args = ap.parse_args()

inst = generate_original(RBParams(5, 1.0, 2, 0.5, 0.9, seed=3))
cnf = satenc.encode(inst)
bits = satenc.bits_per_value(inst.d)
print(f"instance: n={inst.n} d={inst.d} m={inst.m}; {bits} bits per variable")
print(f"CNF: {cnf.num_vars} variables, {cnf.num_clauses} clauses")

res = satenc.dpll_sat(cnf)
print(f"DPLL says {'SAT' if res.sat else 'UNSAT'}; CSP search says "
      f"{'SAT' if solver.solve(inst).sat else 'UNSAT'}")
if res.sat:
    sigma = satenc.decode(cnf, res.model)
    print(f"decoded assignment {list(sigma)} satisfies the CSP: {solver.satisfies_all(inst.constraints, sigma)}")

buf = io.StringIO()
satenc.write_dimacs(cnf, buf)
text = buf.getvalue()
print("\nfirst lines of the DIMACS file:")
print("\n".join(text.splitlines()[:6]))
back = satenc.parse_dimacs(text)
print(f"\nre-read clauses identical: {back.clauses == cnf.clauses}")
if args.out:
    satenc.write_dimacs(cnf, args.out)
