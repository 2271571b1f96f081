#!/usr/bin/env python3
"""Arbitrary-precision oracle for the alpha-beta divergence golden value.

Computes -1/(a*b) * sum_k [p^a q^b - a/(a+b) p^(a+b) - b/(a+b) q^(a+b)]
at 50 decimal digits. The printed value is frozen into divergence_test.cpp
(AbDiv.GoldenValue); rerun this script if the fixture ever changes.
"""

from mpmath import mp, mpf

mp.dps = 50

a = mpf("0.2")
b = mpf("0.7")
p = [mpf("0.5"), mpf("0.5")]
q = [mpf("0.9"), mpf("0.1")]

total = mpf(0)
for pk, qk in zip(p, q):
    total += pk**a * qk**b - a / (a + b) * pk ** (a + b) - b / (a + b) * qk ** (a + b)

print("ab_div(a=0.2, b=0.7, p=[.5,.5], q=[.9,.1]) =", -total / (a * b))
