"""Independent oracle values for the dynamics tests (run by hand; results are frozen in the tests)."""
from fractions import Fraction as F
import numpy as np
from scipy.integrate import solve_ivp

# exact rational evaluation of the controlled oscillator right-hand side
x, v, u = F(1, 2), F(3, 10), F(1, 5)
a, b, g, w = 1, 2, -1, 1
print("acc", u - (a * x * x + b * v * v - g) * v - w * w * x)

def rhs(t, y, a=1.0, b=2.0, g=-1.0, w=1.0, u=0.0):
    return [y[1], u - (a * y[0] ** 2 + b * y[1] ** 2 - g) * y[1] - w * w * y[0]]

s = solve_ivp(rhs, (0, 0.03), [1.0, 0.0], method="DOP853", rtol=1e-13, atol=1e-15)
print("one step", repr(s.y[0, -1]), repr(s.y[1, -1]))
s = solve_ivp(rhs, (0, 3.0), [1.0, 0.0], method="DOP853", rtol=1e-13, atol=1e-15)
print("100 steps", repr(s.y[0, -1]), repr(s.y[1, -1]))
