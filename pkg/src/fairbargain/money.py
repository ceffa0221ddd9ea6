"""Integer-cent money helpers.

All prices and payoffs in this package are integer cents. Keeping money
integral makes equilibrium and exact-equality checks safe from float
drift; formatting only happens at the text boundary.
"""

from __future__ import annotations

CENTS_PER_DOLLAR = 100


def dollars(amount: float | int) -> int:
    """Convert a dollar amount to integer cents (rounded half away from zero)."""
    cents = amount * CENTS_PER_DOLLAR
    return int(cents + 0.5) if cents >= 0 else -int(-cents + 0.5)


def snap_to_tick(cents: int, tick: int) -> int:
    """Round to the nearest multiple of ``tick`` cents, halves away from zero."""
    if tick <= 0:
        raise ValueError("tick must be positive")
    q, r = divmod(cents, tick)
    if 2 * r >= tick:
        q += 1
    return q * tick


def snap_down(cents: int, tick: int) -> int:
    """Largest multiple of ``tick`` that is <= cents."""
    if tick <= 0:
        raise ValueError("tick must be positive")
    return (cents // tick) * tick


def snap_up(cents: int, tick: int) -> int:
    """Smallest multiple of ``tick`` that is >= cents."""
    if tick <= 0:
        raise ValueError("tick must be positive")
    return -((-cents) // tick) * tick


def format_cents(cents: int) -> str:
    """Render cents as a human price string: 1325000 -> ``$13,250``.

    Whole-dollar amounts drop the decimal part; anything else keeps two
    decimal places ($13,000.50).
    """
    sign = "-" if cents < 0 else ""
    cents = abs(cents)
    whole, frac = divmod(cents, CENTS_PER_DOLLAR)
    if frac == 0:
        return f"{sign}${whole:,}"
    return f"{sign}${whole:,}.{frac:02d}"
