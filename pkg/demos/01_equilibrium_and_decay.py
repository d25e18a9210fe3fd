#!/usr/bin/env python3
"""Homogeneous equilibrium of the glucose-insulin reaction.

Solves the scalar equilibrium equation for the published parameter set,
checks the a-priori bounds, and shows the exponential decay envelope of the
linearized flow ||exp(Bx)|| <= M exp(-rho x).
"""
import numpy as np

from panvein import ModelParams, find_equilibrium, mat_exp, reaction_rhs

params = ModelParams()          # c=4.2 cm/min, b=9 mM, L=15 cm, ...
sigma = 15.0                    # homogeneous secretion capacity (pM/(mM min))

eq = find_equilibrium(params, sigma)
print(f"equilibrium:  G* = {eq.G_star:.4f} mM,  I* = {eq.I_star:.2f} pM")
lo, hi, i_up = eq.bounds
print(f"a-priori bounds:  {lo:.1f} < G* < {hi:.1f},  0 < I* < {i_up:.0f}")
print(f"reaction at u*: {reaction_rhs(eq.G_star, eq.I_star, 0.0, params, sigma)}")
print(f"eigenvalues:  {eq.lambda1:.6f},  {eq.lambda2:.6f}  (1/min)")
print(f"decay envelope:  M = {eq.M:.3f},  rho = {eq.rho:.5f} 1/min")

print("\n x (cm)   ||exp(Bx)||_2   M exp(-rho x)")
for x in np.linspace(0.0, params.L, 6):
    norm = np.linalg.norm(mat_exp(eq.B, x), 2)
    print(f"  {x:5.1f}   {norm:12.6f}   {eq.M * np.exp(-eq.rho * x):12.6f}")
