"""Exact polytopes showing the bounds cannot be improved.

Every response assignment of a single ontic state is enumerated, projected
to (p_F, p_minus) and hulled; a second pipeline adds the preparation
equivalence and imperfect postselection. All arithmetic is rational.
"""

from wvctx.polytope import ScenarioParams, format_rational, lemma1_pipeline, lemma2_pipeline


def show(hrep, names):
    for c, b in hrep.inequalities:
        terms = " ".join(f"{format_rational(v):>5} {n}" for v, n in zip(c, names) if v)
        print(f"    {terms} + {format_rational(b)} >= 0")


params = ScenarioParams("1/4", "1/2")
r1 = lemma1_pipeline(params)
print(f"single postselection: {len(r1.assignment)} assignments, {len(r1.deterministic)} outcome-deterministic")
print("  reduced vertices:", [tuple(format_rational(q) for q in v) for v in r1.reduced.vertices])
show(r1.hull, ("p_F", "p_minus"))

r2 = lemma2_pipeline(params)
print(f"\nwith the preparation equivalence: {len(r2.lifted)} vertices in dimension {r2.lifted_dimension}")
print(f"  projected to (p_F, C_S, p_minus): {len(r2.projected)} vertices")
show(r2.hull, ("p_F", "C_S", "p_minus"))

trivial = lemma1_pipeline(ScenarioParams("3/4", "1/2"))
print("\nwhen p_d >= p_tilde only the box survives:")
show(trivial.hull, ("p_F", "p_minus"))
