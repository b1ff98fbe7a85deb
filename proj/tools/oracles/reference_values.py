"""Reference values for the special-function tests, computed with mpmath at 25 digits."""
import sys

import mpmath as mp

mp.mp.dps = 25
EG = mp.euler


def G(t, theta):
    f = lambda s: mp.e ** ((theta - EG) * s) * s * t ** (s - 1) / mp.gamma(s + 1)
    L = mp.log(1 / t) if t < 1 else mp.mpf(1)
    return mp.quad(f, [0, 1 / L, 10 / L, 100 / L, mp.inf])


def dickman_small(s, t):
    return s * t ** (s - 1) * mp.e ** (-EG * s) / mp.gamma(s + 1)


def dickman(s, t):
    if t <= 1:
        return dickman_small(s, t)
    inner = mp.quad(lambda a: dickman(s, a) * (1 + a) ** (-s), [0, min(t - 1, 1), t - 1] if t > 2 else [0, t - 1])
    return s * t ** (s - 1) * (mp.e ** (-EG * s) / mp.gamma(s + 1) - inner)


def main():
    sys.stdout.reconfigure(line_buffering=True)
    print("// gamma")
    for s in ["0.001", "0.01", "0.1", "0.25", "0.5", "0.75", "1", "1.5", "2", "2.5", "3.3", "4.75", "5", "7.1",
              "10", "12.5", "20", "33.3", "50", "100.5", "150"]:
        print(f'{{{s}, {mp.nstr(mp.gamma(mp.mpf(s)), 20)}}},')
    print("// G")
    for theta in [-1, 0, 1]:
        for t in ["1e-12", "1e-6", "0.01", "0.3", "1", "1.7"]:
            print(f'{{{theta}, {t}, {mp.nstr(G(mp.mpf(t), theta), 20)}}},')
    print("// dickman")
    for s, t in [("1", "2.5"), ("1", "3"), ("0.5", "1.5"), ("2", "1.8"), ("3", "2.5"), ("0.3", "0.4")]:
        print(f'{{{s}, {t}, {mp.nstr(dickman(mp.mpf(s), mp.mpf(t)), 20)}}},')


if __name__ == "__main__":
    main()
