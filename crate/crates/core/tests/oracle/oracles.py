# SPDX-License-Identifier: Apache-2.0
#
# Independent arbitrary-precision evaluation of the closed-form quantities
# whose values are frozen into the Rust test suites. Run with:
#
#     python3 crates/core/tests/oracle/oracles.py
#
# Requires mpmath. Nothing here imports or mirrors the Rust code paths.

from mpmath import mp, mpf, exp, log, sqrt

mp.dps = 40


def ggt(n, k_obs, f1, f2):
    n = mpf(n)
    m = (1 / n) * (1 - mpf("2.08") / n ** mpf("0.7")) * f1 + (mpf("4.1") / n ** mpf("1.7")) * f2
    c = min(max(1 - m, mpf("1e-12")), mpf(1))
    return m, c, k_obs / c


def shade_entropy(p_hat, k_obs, n, s_final):
    h = mpf(0)
    for p in p_hat:
        ps = k_obs * mpf(p) / s_final
        if ps >= 1:
            continue
        h -= ps * log(ps) / (1 - (1 - ps) ** n)
    return h


def lse(a, b, alpha):
    a, b, alpha = mpf(a), mpf(b), mpf(alpha)
    return log(exp(alpha * a) + exp(alpha * b)) / alpha


if __name__ == "__main__":
    for args in [(5, 4, 3, 1), (25, 6, 2, 1)]:
        m, c, s = ggt(*args)
        print("ggt", args, mp.nstr(m, 20), mp.nstr(c, 20), mp.nstr(s, 20))
    print("shade [.5,.5] s=2 n=10", mp.nstr(shade_entropy([mpf(1) / 2] * 2, 2, 10, mpf(2)), 20))
    print("shade [.5,.5] s=4 n=10", mp.nstr(shade_entropy([mpf(1) / 2] * 2, 2, 10, mpf(4)), 20))
    print("lse 10,10,a=.1", mp.nstr(lse(10, 10, "0.1"), 20))
    print("lse 10,2,a=1", mp.nstr(lse(10, 2, 1), 20))
    print("heat [0,2] b=1", mp.nstr(1 + exp(-2), 20))
    for n in range(2, 11):
        lam = mpf(n) / (n - 1)
        print("heat K", n, mp.nstr(1 + (n - 1) * exp(-lam), 20))
    print("sqrt5", mp.nstr(sqrt(5), 20))
    print("win rates", [mp.nstr(mpf(w) / (w + l) * 100, 10) for w, l in
                        [(3372, 1176), (3125, 1351), (3311, 1358), (3523, 2014), (3187, 1825), (3363, 2169)]])
