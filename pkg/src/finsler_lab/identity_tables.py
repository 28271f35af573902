"""Published coefficient tables for the rational form of H^i_00.

Transcribed verbatim as data: nothing here is corrected.  ``q`` is an
:class:`~finsler_lab.identity.Invariants` record; vector quantities
(``s_i0``, ``b_up``, ``y``) are arrays so every group evaluates to a vector.
Barred symbols of the Matsumoto tables are evaluated with the Matsumoto
metric's invariants, including the places where the print drops the bar
(``2 + b^2`` in Bbar, ``b^i beta`` in Bbar).

Each numerator group multiplies a fixed power of alpha (resp. alpha-bar),
listed in ``F_NUM_POWERS`` / ``BAR_NUM_POWERS``.
"""

F_NUM_POWERS = {"A": 9, "B": 8, "C": 7, "D": 6, "E": 5, "F": 4, "H": 3, "P": 2, "Q": 0}
F_DEN_POWERS = {"I": 8, "J": 6, "K": 4, "L": 2, "M": 0}
BAR_NUM_POWERS = {"Abar": 6, "Bbar": 5, "Cbar": 4, "Dbar": 3, "Ebar": 2, "Fbar": 1, "Hbar": 0}
BAR_DEN_POWERS = {"Ibar": 5, "Jbar": 4, "Kbar": 3, "Lbar": 2, "Mbar": 1}


def f_numerator(q):
    k, eps, mu, b2, beta = q.k, q.eps, q.mu, q.b2, q.beta
    r00, r0, s0, si0, bi, yi = q.r00, q.r0, q.s0, q.s_i0, q.b_up, q.y
    return {
        "A": (1 + 2 * k * b2) * (eps * (1 + 2 * k * b2) * si0 - 2 * eps * k * s0 * bi),
        "B": (1 + 2 * k * b2) * (
            2 * k**2 * (1 + 2 * k * b2) * beta * si0
            - 2 * k * (2 * k * bi * beta + mu * yi) * s0
            - 2 * mu * k * yi * r0
            - k * r00 * bi
        ),
        "C": (
            -(7 + 2 * k * b2) * (1 + 2 * k * b2) * eps * k * si0 * beta**2
            + 4 * eps * (2 + k * b2) * k**2 * bi * beta**2 * s0
            - 12 * mu * eps * k**2 * beta * s0 * b2 * yi
        ),
        "D": (
            (-14 - 4 * k * b2) * (1 + 2 * k * b2) * k**2 * beta**3 * si0
            + 8 * k**3 * (2 + k * b2) * bi * beta**3 * s0
            + (3 * k**2 * bi * beta**2 - 6 * mu * k**2 * b2 * beta * yi) * r00
            + mu * k**2 * (10 + 8 * k * b2) * r0 * yi * beta**2
            + mu * k**2 * (10 + 32 * k * b2) * beta**2 * s0 * yi
        ),
        # last term is printed without a y^i factor
        "E": (
            -8 * eps * k**2 * beta**4 * si0
            - 6 * eps * k**3 * beta**4 * s0 * bi
            - 12 * mu * eps * k**2 * (1 + k * b2) * beta**3 * s0
        ),
        "F": k**2 * beta**3 * (
            18 * k * (1 + k * b2) * beta**2 * si0
            - mu * k * (14 + 4 * k * b2) * beta * r0 * yi
            - 12 * k * beta * (4 * yi + 5 * k * bi * beta) * s0
            - (1 + 2 * k * b2) * (k * bi * beta + 6 * mu * yi) * r00
        ),
        "H": 3 * eps * k**3 * beta**5 * (3 * beta * si0 + 4 * mu * s0 * yi),
        "P": 3 * k**3 * beta**5 * (
            -(k * bi * beta + 2 * mu * (2 + k * b2) * yi) * r00
            + 2 * k * beta * (-3 * si0 * beta + mu * (5 * s0 + r0) * yi)
        ),
        "Q": 6 * mu * k**4 * beta**7 * r00 * yi,
    }


def f_denominator(q):
    k, b2, beta = q.k, q.b2, q.beta
    return {
        "I": (2 * k * b2 + 1) ** 2,
        "J": -4 * k * (1 + 2 * k * b2) * (2 + k * b2) * beta**2,
        "K": k**2 * beta**4 * (22 + 38 * k * b2 + 4 * k**2 * b2**2),
        "L": -12 * k**3 * beta**6 * (b2 * k + 2),
        "M": 9 * k**4 * beta**8,
    }


def bar_numerator(q):
    mu, b2, beta = q.mu, q.b2, q.beta
    r00, r0, s0, si0, bi, yi = q.r00, q.r0, q.s0, q.s_i0, q.b_up, q.y
    return {
        "Abar": -(1 + 2 * b2) * (2 * bi * s0 - (1 + 2 * b2) * si0),
        "Bbar": (1 + 2 * b2) * (
            -4 * beta * (2 + b2) * si0 + bi * r00 - 2 * mu * yi * ((1 + 2 * b2) * s0 + r0)
        ) + 2 * (5 + 4 * b2) * (b2 * mu * yi + bi * beta) * s0,
        "Cbar": 2 * beta * (1 + 2 * b2) * (2 * (3 * beta * si0 - bi * r00) + mu * yi * (7 * s0 + 4 * r0))
        + 3 * (3 * beta**2 * si0 - mu * yi * (b2 * r00 + 2 * beta * (4 * b2 * s0 - r0))),
        "Dbar": -2 * beta * (
            19 * beta**2 * si0
            - 8 * bi * beta * (b2 + 2) * r00
            + 2 * mu * yi * (19 * beta * s0 + 24 * beta * r0 + 8 * b2 * beta * s0 - 6 * b2 * r00)
        ),
        "Ebar": -3 * beta**2 * (
            4 * bi * beta * r00 + mu * yi * ((4 * b2 - 1) * r00 - 4 * beta * (3 * s0 + 2 * r0))
        ),
        "Fbar": -12 * mu * yi * beta**3 * r00,
        "Hbar": 12 * mu * yi * beta**4 * r00,
    }


def bar_denominator(q):
    b2, beta = q.b2, q.beta
    return {
        "Ibar": (1 + 2 * b2) ** 2,
        "Jbar": -2 * beta * (5 + 2 * b2 * (7 + 4 * b2)),
        "Kbar": beta**2 * (37 + 16 * b2 * (b2 + 4)),
        "Lbar": -12 * beta**3 * (4 * b2 + 5),
        "Mbar": 36 * beta**4,
    }
