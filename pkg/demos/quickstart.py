"""Embed a random point set and print the certified distortion."""
from fractions import Fraction

from latticejl import EmbedConfig, certify, sample_point_set, search_lambda

S = sample_point_set(n=16, dim=32, lambda0=2, bound=4, seed=0)
config = EmbedConfig(Fraction(1, 4), k=32, projection="auto")
lam, result = search_lambda(S, config)
report = certify(result)

print(f"n={len(S)} d={S.dim} -> k={result.k}, lambda={lam}")
print(f"rotation strategy: {result.rotation_witness.strategy}")
print(f"ratio range [{report.min_ratio:.4f}, {report.max_ratio:.4f}]")
print(f"allowed     [{float(report.lower_bound):.4f}, {float(report.upper_bound):.4f}]")
print("certified" if report.passed else "NOT certified")
