#!/usr/bin/env python3
"""Regenerates tests/fixtures/nmea_corpus.tsv.

Expected values come from a naive split-on-comma reading of each sentence,
and checksums from a byte-wise XOR, both independent of the C++ parser.
"""
import random
import sys

KNOT = 0.514444


def xor(body):
    c = 0
    for ch in body.encode():
        c ^= ch
    return c


def sentence(body, lower=False):
    cs = "%02X" % xor(body)
    return "$%s*%s" % (body, cs.lower() if lower else cs)


def coord(value, hemi, deg_digits):
    deg = int(value[:deg_digits])
    minutes = float(value[deg_digits:])
    v = deg + minutes / 60.0
    return -v if hemi in ("S", "W") else v


def oracle(line):
    body, cs = line[1:].split("*")
    if int(cs, 16) != xor(body):
        return ("error:checksum",)
    f = body.split(",")
    kind = f[0][2:]
    if kind == "GGA":
        valid = int(f[6]) > 0
        lat = coord(f[2], f[3], 2) if f[2] else None
        lon = coord(f[4], f[5], 3) if f[4] else None
        alt = float(f[9]) if f[9] else None
        return ("fix", valid, lat, lon, alt, None)
    if kind == "RMC":
        valid = f[2] == "A"
        lat = coord(f[3], f[4], 2) if f[3] else None
        lon = coord(f[5], f[6], 3) if f[5] else None
        spd = float(f[7]) * KNOT if f[7] else None
        return ("fix", valid, lat, lon, None, spd)
    return ("nofix",)


def fmt(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def dm(value, deg_digits):
    deg = int(abs(value))
    minutes = (abs(value) - deg) * 60.0
    return "%0*d%07.4f" % (deg_digits, deg, minutes)


def main():
    rng = random.Random(20240611)
    lines = [
        # textbook examples
        "$GPGGA,123519,4807.038,N,01131.000,E,1,08,0.9,545.4,M,46.9,M,,*47",
        "$GPRMC,123519,A,4807.038,N,01131.000,E,022.4,084.4,230394,003.1,W*6A",
        sentence("GPGGA,092750.000,4600.0000,N,01500.0000,E,1,8,1.03,61.7,M,55.2,M,,"),
        sentence("GPGGA,092751.000,4630.0000,N,01500.0000,E,1,8,1.03,61.7,M,55.2,M,,"),
        sentence("GPGGA,000000.00,,,,,0,00,99.99,,,,,,"),
        sentence("GPRMC,000000.00,V,,,,,,,010170,,,N"),
        sentence("GNGGA,101010.50,3345.1234,S,07030.9876,W,2,12,0.7,-12.5,M,20.1,M,,"),
        sentence("GNRMC,101010.50,A,3345.1234,S,07030.9876,W,0.00,,110624,,,A"),
        sentence("GPGSV,3,1,11,03,03,111,00,04,15,270,00,06,01,010,00,13,06,292,00"),
        sentence("GPVTG,054.7,T,034.4,M,005.5,N,010.2,K"),
        sentence("GPGGA,235959.999,0000.0000,N,00000.0000,E,1,04,2.0,0.0,M,0.0,M,,", lower=True),
        sentence("GPRMC,120000,A,8959.9999,N,17959.9999,W,150.5,359.9,311299,,,A"),
    ]
    for i in range(200):
        lat = rng.uniform(-89.9, 89.9)
        lon = rng.uniform(-179.9, 179.9)
        t = "%02d%02d%02d.%02d" % (rng.randrange(24), rng.randrange(60), rng.randrange(60), rng.randrange(100))
        ns = "N" if lat >= 0 else "S"
        ew = "E" if lon >= 0 else "W"
        if i % 2 == 0:
            alt = "%.1f" % rng.uniform(-50, 3000)
            q = rng.choice([1, 1, 1, 2, 0])
            body = "GPGGA,%s,%s,%s,%s,%s,%d,%02d,%.1f,%s,M,%.1f,M,," % (
                t, dm(lat, 2), ns, dm(lon, 3), ew, q, rng.randrange(4, 13), rng.uniform(0.5, 3), alt, rng.uniform(-30, 60))
        else:
            status = rng.choice(["A", "A", "A", "V"])
            body = "GPRMC,%s,%s,%s,%s,%s,%s,%.2f,%.1f,110624,,,A" % (
                t, status, dm(lat, 2), ns, dm(lon, 3), ew, rng.uniform(0, 60), rng.uniform(0, 360))
        lines.append(sentence(body, lower=(i % 7 == 0)))
    # corrupted copies of good sentences: one character changed, checksum kept
    for i in range(30):
        good = lines[12 + i]
        body, cs = good[1:].split("*")
        pos = rng.randrange(6, len(body))
        ch = body[pos]
        repl = "7" if ch != "7" else "3"
        bad = "$" + body[:pos] + repl + body[pos + 1:] + "*" + cs
        lines.append(bad)

    out = sys.stdout
    out.write("# sentence\texpect\tvalid\tlat\tlon\taltitude_m\tspeed_mps\n")
    for line in lines:
        o = oracle(line)
        if o[0] != "fix":
            out.write("%s\t%s\t\t\t\t\t\n" % (line, o[0]))
        else:
            out.write("%s\tfix\t%s\n" % (line, "\t".join(fmt(v) for v in o[1:])))


main()
