"""High-precision reference values frozen into the C++ unit tests.

Run with `python3 tests/oracles/reference_values.py`; the printed numbers
are pasted into the test sources.
"""

import mpmath as mp

mp.mp.dps = 40

# Default network parameters (linear units).
LAM = mp.mpf("4.6e-6")
A = mp.mpf("1e-3")
ALPHA = mp.mpf("3.7")
PT = mp.mpf(10) ** ((23 - 30) / mp.mpf(10))
N0 = mp.mpf(10) ** ((-103 - 30) / mp.mpf(10))
THETA = mp.mpf(10) ** (mp.mpf(3) / 10)


def hyp2f1_cases():
    cases = [
        (1, mp.mpf(2) / ALPHA, 1 + mp.mpf(2) / ALPHA, -mp.mpf("0.5")),
        (1, mp.mpf(2) / ALPHA, 1 + mp.mpf(2) / ALPHA, -mp.mpf(10)),
        (1, mp.mpf(2) / ALPHA, 1 + mp.mpf(2) / ALPHA, -mp.mpf("1e6")),
        (mp.mpf("0.5"), mp.mpf("1.5"), mp.mpf("2.5"), -mp.mpf(3)),
        (1, mp.mpf("0.5"), mp.mpf("1.5"), -mp.mpf(100)),
        (mp.mpf("0.3"), mp.mpf("0.7"), mp.mpf("2.0"), -mp.mpf("0.999")),
    ]
    for a, b, c, z in cases:
        print("hyp2f1", mp.nstr(a, 17), mp.nstr(b, 17), mp.nstr(c, 17), mp.nstr(z, 17),
              mp.nstr(mp.hyp2f1(a, b, c, z), 17))


def laplace_exponent(s, x):
    f = lambda r: s * PT * A * r / (r ** ALPHA + s * PT * A)
    return 2 * mp.pi * LAM * mp.quad(f, [x, 10 * x, 100 * x, mp.inf])


def laplace_cases():
    for x in (50, 200, 800):
        s = THETA * mp.mpf(x) ** ALPHA / (PT * A)
        print("laplace x=%d s=theta x^a/(PtA)" % x, mp.nstr(mp.e ** (-laplace_exponent(s, x)), 17))


def sic_pair(g1, g2, th, ih):
    c = ih + 1

    def order(ga, gb):
        # ga decoded first: Pa >= th (Pb + c), Pb >= th c.
        f = lambda pb: mp.e ** (-pb / gb) / gb * mp.e ** (-th * (pb + c) / ga)
        return mp.quad(f, [th * c, mp.inf])

    return order(g1, g2) + order(g2, g1)


def sic_cases():
    for g1, g2, th, ih in ((10, 3, 2, 0.5), (50, 50, 1.5, 0), (5, 200, 4, 2)):
        print("sic_pair", g1, g2, th, ih, mp.nstr(sic_pair(mp.mpf(g1), mp.mpf(g2), mp.mpf(th), mp.mpf(ih)), 17))


def cell_basic():
    # Basic throughput 2 E[chi_ub] averaged over the nearest-BS distance law.
    def tput(r):
        gamma = PT * A / (N0 * r ** ALPHA)
        s = THETA * r ** ALPHA / (PT * A)
        return 2 * mp.e ** (-THETA / gamma) * mp.e ** (-laplace_exponent(s, r))

    mp.mp.dps = 20
    dens = lambda r: 2 * mp.pi * LAM * r * mp.e ** (-LAM * mp.pi * r * r)
    v = mp.quad(lambda r: tput(r) * dens(r), [0, 100, 250, 500, 1000, 3000])
    print("cell basic", mp.nstr(v, 12))


if __name__ == "__main__":
    hyp2f1_cases()
    laplace_cases()
    sic_cases()
    cell_basic()
