"""Field-unit to SI conversion factors."""

PSI = 6894.757  # Pa
FT = 0.3048  # m
CP = 1e-3  # Pa s
MD = 9.869233e-16  # m^2
DAY = 86400.0  # s
GRAVITY = 9.80665  # m/s^2


def psi(x):
    return x * PSI


def per_psi(x):
    return x / PSI


def ft(x):
    return x * FT


def ft3_per_day(x):
    return x * FT**3 / DAY


def cp(x):
    return x * CP


def md(x):
    return x * MD


def days(x):
    return x * DAY
