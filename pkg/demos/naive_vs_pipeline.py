"""Project-then-round versus the rotated pipeline on a clustered instance.

The instance is a lattice point with its unit-step neighbours. Rounding errors
of size up to sqrt(k) / (2 lambda0) are comparable to the pair distances, so
the naive map overshoots the distortion bound while the pipeline stays inside.
"""
import json
from fractions import Fraction
from pathlib import Path

from latticejl import EmbedConfig, LatticePointSet, certify, embed, naive_baseline

path = Path(__file__).resolve().parents[1] / "tests" / "data" / "adversarial_k16.json"
S = LatticePointSet.from_dict(json.loads(path.read_text()))
eps, lam = Fraction(1, 8), 9

result = embed(S, lam, EmbedConfig(eps, k=16, projection="hadamard", seed=1))
pipeline = certify(result)
naive = naive_baseline(S, result.projection, lam, eps)

print(f"upper bound         {float(pipeline.upper_bound):.4f}")
print(f"pipeline max ratio  {pipeline.max_ratio:.4f}  passed={pipeline.passed}")
print(f"naive max ratio     {naive.max_ratio:.4f}  passed={naive.passed}")
print(f"naive max rounding  {naive.max_rounding:.4f}")
