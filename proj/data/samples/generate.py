"""Writes the synthetic detection-probability curves bundled in this directory.

These are NOT measurements. They are logistic curves shaped like pulsed- and
CW-blinding response curves so that the gap checker has realistic input:

* pulsed blinding at 2-10 MHz: the default-gate curve reaches certainty near
  -30 dB while the lowered-gate curve stays dark up to -30 + gap dB, with the
  gap widening as the repetition rate rises and the average blinding power
  falls (28 dB at 10 MHz);
* CW blinding: the two gate levels overlap, so the gap is about 1 dB.

Run from this directory: python3 generate.py
"""

import math

LN99 = math.log(99.0)


def logistic_curve(e_threshold, width, rising_from_never):
    # Place the centre so that p crosses 1% (never) or 99% (always) at e_threshold.
    centre = e_threshold + LN99 * width if rising_from_never else e_threshold - LN99 * width
    points = []
    e = -50.0
    while e <= 15.0 + 1e-9:
        p = 1.0 / (1.0 + math.exp(-(e - centre) / width))
        points.append((e, round(p, 4)))
        e += 0.5
    return points


def write(name, gate, mode, rate, power, points, note):
    with open(name, "w") as f:
        f.write("# synthetic sample, not a measurement: %s\n" % note)
        f.write("# gate_label: %s\n" % gate)
        f.write("# blinding_mode: %s\n" % mode)
        if rate is not None:
            f.write("# repetition_rate_mhz: %g\n" % rate)
        f.write("# avg_blinding_power: %g\n" % power)
        f.write("energy_db,p_det\n")
        for e, p in points:
            f.write("%.1f,%.4f\n" % (e, p))


E_ALWAYS_DEFAULT = -30.0
PULSED = [  # rate MHz, relative average blinding power, gap dB
    (2, 1.00, 10.0),
    (4, 0.62, 15.0),
    (6, 0.45, 20.0),
    (8, 0.36, 24.0),
    (10, 0.30, 28.0),
]

for rate, power, gap in PULSED:
    write("pulsed_%02dmhz_default.csv" % rate, "default", "pulsed", rate, power,
          logistic_curve(E_ALWAYS_DEFAULT, 0.6, False),
          "default gate 3.95 V, pulsed blinding %d MHz" % rate)
    write("pulsed_%02dmhz_low.csv" % rate, "low", "pulsed", rate, power,
          logistic_curve(E_ALWAYS_DEFAULT + gap, 1.0, True),
          "lowered gate 2.31 V, pulsed blinding %d MHz" % rate)

write("cw_default.csv", "default", "cw", None, 2.5,
      logistic_curve(-20.0, 1.5, False), "default gate 3.95 V, CW blinding")
write("cw_low.csv", "low", "cw", None, 2.5,
      logistic_curve(-19.0, 1.5, True), "lowered gate 2.31 V, CW blinding")
