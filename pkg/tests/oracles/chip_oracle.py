"""Arbitrary-precision reference values for the per-grain chip formation model.

Standalone: uses mpmath only, shares no code with the package. Run directly to
print the frozen constants used by the test suite.
"""

import mpmath as mp

mp.mp.dps = 50

PHASES = {
    # name: (E [Pa], mu, sigma_p [Pa])
    "soft": (mp.mpf("70e9"), mp.mpf("0.3"), mp.mpf("240e6")),
    "brittle": (mp.mpf("8.7e9"), mp.mpf("0.5"), mp.mpf("0.04e6")),
}
R = mp.mpf("1.36")


def beta(mu):
    return mp.acos(1 / mp.sqrt(1 + mu**2))


def hm(mu, r):
    return r * (1 - mp.cos(mp.pi / 4 - beta(mu) / 2))


def contact_len(hm_, r):
    return mp.sqrt(r**2 - (r - hm_) ** 2)


def sigma(E, hm_, r):
    return E * hm_ / contact_len(hm_, r)


def hr(E, mu, sp, r):
    h = hm(mu, r)
    s = sigma(E, h, r)
    if s < sp:
        return h
    return h - sp * contact_len(h, r) / E


if __name__ == "__main__":
    print("beta(0.3) =", mp.nstr(beta(mp.mpf("0.3")), 20))
    print("hm(0, 1) =", mp.nstr(hm(0, 1), 20))
    for name, (E, mu, sp) in PHASES.items():
        h = hm(mu, R)
        print(name, "hm =", mp.nstr(h, 20), "sigma =", mp.nstr(sigma(E, h, R), 20),
              "hr =", mp.nstr(hr(E, mu, sp, R), 20), "contact =", mp.nstr(contact_len(h, R), 20))
