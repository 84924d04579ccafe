"""Three ontic models that reproduce the anomalous statistics, each by breaking one assumption."""

import math

from wvctx.onticmodels import (
    audit_model,
    build_full_disturbance_model,
    build_minimal_disturbance_model,
    build_psi_complete_model,
    extract_operational_data,
    psi_complete_inputs,
)
from wvctx.qmath import ket_projector
from wvctx.schemes import sigma_preparations, spread_for_disturbance

a = math.pi / 4
b = a - math.acos(1 / math.sqrt(5))
rho = ket_projector([math.cos(a), math.sin(a)])
post = ket_projector([math.cos(b), math.sin(b)])
E = ket_projector([0, 1])

data = extract_operational_data(rho, E, post, spread_for_disturbance(0.05), 64, sigma_preparations(post, rho))

models = [
    build_minimal_disturbance_model(data),
    build_full_disturbance_model(data),
    build_psi_complete_model(*psi_complete_inputs(data)),
]
for m in models:
    rep = audit_model(m, data)
    print(f"{m.name}: residual {rep.max_residual:.1e}, breaks {', '.join(rep.failing) or 'nothing'}")

md = models[0]
neg = md.instrument.sum(axis=1)[data.negative_cells].sum(axis=0)
print(f"\nminimal-disturbance model: P(x < 0 | lambda) = {neg[0]:.3f}, {neg[1]:.3f}")
transition = models[1].instrument.sum(axis=0)
print(f"full-disturbance model: P(lambda' = 0 | lambda = 1) = {transition[0, 1]:.3f}")
