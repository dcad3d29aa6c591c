#!/usr/bin/env python3
"""Evaluates the consensus, cost and threshold formulas phase by phase, with
plain floats, to produce the reference values hard-coded in the C++ tests.

Run: python3 tests/oracle/derive_values.py
"""
import math

MB = 8e6


def consensus(x, omega, r, q=10, sig=1e6, ver=1e6, fp=60e9, nodes=(60e9,) * 4, m=3, n=1):
    tx = r * q * x / omega
    bd = x / omega + r * q * (sig + ver) / fp
    pp = tx + (sig + (m - 1) * ver) / fp + max((sig + ver) * (q + 1) / f for f in nodes)
    pr = tx + max((2 * n * (sig + ver) + sig + (m - 1) * ver) / f for f in nodes)
    cm = pr
    rp = tx + max(q * (sig + ver) / f for f in nodes) + 2 * n * q * (sig + ver) / fp
    return [bd, pp, pr, cm, rp, bd + pp + pr + cm + rp]


def remote(x, cycles, omega, r, cpu, rho=0.5, wt=0.5, we=0.5, bc=True, queue=True, backlog=0.0):
    up = x / omega
    d = cycles / cpu + up
    if bc:
        d += consensus(x, omega, r)[-1]
    if queue:
        s = cycles / cpu + up
        d += backlog + s  # u >= 1 branch; empty queue gives u = 1
    e = rho * up
    return d, e, wt * d + we * e


def local(cycles, fl=1e9, tau=5e-27, wt=0.5, we=0.5):
    d = cycles / fl
    e = tau * fl * fl * cycles
    return d, e, wt * d + we * e


def rate(signal, interf, b=50e6, m=10, noise=2e-13):
    return b / m * math.log2(1 + signal / (interf + noise))


def threshold(signal, x, cycles, r, cpu, bc, queue, b=50e6, m=10, noise=2e-13):
    # Solve remote cost(omega) = local cost for omega, then the rate equation
    # for the interference. remote cost is affine in 1/omega: probe two rates.
    c1 = remote(x, cycles, 1.0, r, cpu, bc=bc, queue=queue)[2]
    c2 = remote(x, cycles, 2.0, r, cpu, bc=bc, queue=queue)[2]
    a = 2.0 * (c1 - c2)
    fixed = c1 - a
    margin = local(cycles)[2] - fixed
    if margin <= 0:
        return float("-inf")
    omega = a / margin
    return signal / (2 ** (omega * m / b) - 1) - noise


if __name__ == "__main__":
    x = 10 * MB
    print("consensus r=2 x=10MB w=5e6:", ["%.17g" % v for v in consensus(x, 5e6, 2)])
    for name, cpu in (("fin", 60e9), ("ein", 100e9)):
        print(name, "cost x=10MB P=2e9 w=5e6 r=10:", ["%.17g" % v for v in remote(x, 2e9, 5e6, 10, cpu)])
    sig = 0.5 * 100.0 ** -3
    print("threshold defaults:", "%.17g" % threshold(sig, x, 2e9, 10, 60e9, True, True))
    # Small data so offloading can win: 50 KB, 5 Gcycles, BC and queue off.
    print("threshold 50KB/5Gc nobc noq:", "%.17g" % threshold(sig, 50 * 8e3, 5e9, 10, 60e9, False, False))
    print("threshold 50KB/5Gc bc r=3 q:", "%.17g" % threshold(sig, 50 * 8e3, 5e9, 3, 60e9, True, True))
    print("rate 3s/s:", "%.17g" % rate(3 * 2e-13, 2e-13))
