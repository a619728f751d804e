"""Physical constants and mission-scale reference values (SI units)."""

C = 299792458.0
C2 = C * C

AU = 1.495978707e11
DAY = 86400.0
YEAR = 365.25 * DAY

GM_SUN = 1.32712440018e20
GM_EARTH = 3.986004418e14
GM_JUPITER = 1.26687e17

R_SUN = 6.957e8
R_EARTH = 6.378e6
R_JUPITER = 7.1492e7

OMEGA_EARTH = 7.2921150e-5  # rad/s, sidereal rotation rate
EARTH_ORBIT_PERIOD = 365.256363004 * DAY
JUPITER_ORBIT_RADIUS = 5.2 * AU

# Speed of the Sun through the frame where the CMB is isotropic.
V_SUN_CMB = 350e3

G = 6.67430e-11
M_EARTH = GM_EARTH / G
