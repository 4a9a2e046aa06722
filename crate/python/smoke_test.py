"""Smoke test for the chromabench Python extension.

Build and install with `pip install --no-build-isolation -e crates/py`
(or `maturin develop -m crates/py/Cargo.toml`), then run this script.
"""

import math
import os
import sys
import tempfile

import chromabench as cb

DATA = os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "data", "kodak_codecs.csv")


def check(name, ok):
    print(f"{'PASS' if ok else 'FAIL'} {name}")
    return ok


def main():
    results = []

    img = cb.Image.synthetic(3, 64, 64)
    results.append(check("synthetic image shape", (img.width, img.height, img.space) == (64, 64, "srgb")))

    back = img.convert("lab").convert("srgb")
    err = max(abs(a - b) for a, b in zip(img.plane(1), back.plane(1)))
    results.append(check("lab roundtrip", err < 1e-4))

    results.append(check("delta_e00 reference pair", abs(cb.delta_e00([50.0, 2.6772, -79.7751], [50.0, 0.0, -82.7485]) - 2.0425) < 1e-4))

    m = cb.metrics(img, img)
    results.append(check("identity metrics", m["psnr_db"] == 100.0 and m["ciede2000"] == 0.0))

    rates = []
    for q in ["q1", "q2", "q3", "q4"]:
        enc = cb.encode(img, cb.CodecConfig("yuv", q))
        rates.append(enc.bpp)
        parts = enc.component_bpp()
        results.append(check(f"yuv {q} components sum", len(parts) == 4 and math.isclose(sum(parts.values()), enc.bpp, rel_tol=1e-12)))
        dec = cb.decode(enc.to_bytes())
        results.append(check(f"yuv {q} decodes", (dec.width, dec.height) == (64, 64)))
    results.append(check("bpp increases with operating point", all(a < b for a, b in zip(rates, rates[1:]))))

    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "img.png")
        img.write(path)
        results.append(check("png roundtrip", cb.Image.read(path).to_rgb8() == img.to_rgb8()))

    curves = {(c.codec, c.metric): c for c in cb.read_curves(DATA)}
    r = cb.bd(curves[("VTM", "psnr")], curves[("SLIC-RGB", "psnr")])
    results.append(check(f"bd-rate SLIC-RGB psnr {r['bd_rate_percent']:.2f}%", abs(r["bd_rate_percent"] - 12.60) < 2.0))

    a = cb.RdCurve("a", "psnr", [(0.1, 30.0), (0.2, 33.0), (0.4, 36.0), (0.8, 39.0)])
    b = cb.RdCurve("b", "psnr", [(2 * x, y) for x, y in a.points])
    results.append(check("doubled rate gives +100%", abs(cb.bd(a, b)["bd_rate_percent"] - 100.0) < 1e-9))

    presets = cb.lagrangian_presets()
    results.append(check("four presets", [p["label"] for p in presets] == ["q1", "q2", "q3", "q4"]))

    try:
        cb.CodecConfig("yuv", "q2", chroma_channels=0)
        results.append(check("invalid config rejected", False))
    except cb.ChromabenchError:
        results.append(check("invalid config rejected", True))

    print(f"{sum(results)}/{len(results)} passed")
    return 0 if all(results) else 1


if __name__ == "__main__":
    sys.exit(main())
