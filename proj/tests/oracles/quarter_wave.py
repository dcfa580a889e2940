#!/usr/bin/env python3
"""Closed-form reflectance of a lossless quarter-wave layer at its design
wavelength, R = ((n0*ns - n1^2) / (n0*ns + n1^2))^2.

The printed value is frozen into the TMM unit and acceptance tests.
"""

n0, n1, ns = 1.0, 2.0, 1.5
lam0 = 700.0
print("thickness_nm", repr(lam0 / (4 * n1)))
print("R", repr(((n0 * ns - n1 ** 2) / (n0 * ns + n1 ** 2)) ** 2))
