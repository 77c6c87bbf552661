#!/usr/bin/env python3
"""Regenerates data/manifests/*.json.

The eight manifests are synthetic shape-alikes of common websites: resource
counts grow from wikipedia (fewest) to nytimes (most), and nytimes is the
only script-heavy page (script bytes exceed image bytes). They are not
measurements of the real sites.

Usage: tools/gen_synthetic_manifests.py [output_dir]
"""

import json
import pathlib
import random
import sys

# site, resource count, seed, script share, image share, mean image KB,
# mean script KB
SITES = [
    ("wikipedia", 12, 11, 0.17, 0.50, 18, 22),
    ("w3c", 24, 12, 0.17, 0.55, 25, 15),
    ("apache", 31, 13, 0.13, 0.60, 20, 12),
    ("statcounter", 42, 14, 0.21, 0.52, 22, 30),
    ("apple", 58, 15, 0.17, 0.62, 70, 40),
    ("etsy", 77, 16, 0.26, 0.55, 35, 38),
    ("amazon", 104, 17, 0.24, 0.58, 30, 35),
    ("nytimes", 151, 18, 0.46, 0.30, 28, 60),
]

IMAGE_EXT = ["jpg", "png", "webp", "svg", "avif", "gif"]


def weighted(rng, choices):
    total = sum(w for _, w in choices)
    pick = rng.uniform(0, total)
    for value, w in choices:
        pick -= w
        if pick <= 0:
            return value
    return choices[-1][0]


def build(site, count, seed, script_share, image_share, img_kb, js_kb):
    rng = random.Random(seed)
    resources = [{
        "resource_id": "doc",
        "url_path": "/index.html",
        "rtype": "document",
        "size_bytes": rng.randint(30, 140) * 1024 + rng.randint(0, 1023),
        "chromium_priority": "very_high",
    }]
    sheets, scripts = [], []
    n_sheets = max(1, round(count * 0.07))
    n_scripts = max(1, round(count * script_share))
    n_images = max(1, round(count * image_share))
    n_other = max(0, count - 1 - n_sheets - n_scripts - n_images)

    for k in range(n_sheets):
        rid = f"css{k}"
        # An occasional medium stylesheet outlier on larger pages.
        prio = "medium" if k == n_sheets - 1 and n_sheets > 2 else "very_high"
        resources.append({
            "resource_id": rid,
            "url_path": f"/static/css/{rid}.css",
            "rtype": "stylesheet",
            "size_bytes": int(rng.lognormvariate(0, 0.6) * 12 * 1024) + 200,
            "chromium_priority": prio,
        })
        sheets.append(rid)

    for k in range(n_scripts):
        rid = f"js{k}"
        entry = {
            "resource_id": rid,
            "url_path": f"/static/js/{rid}.js",
            "rtype": "script",
            "size_bytes": int(rng.lognormvariate(0, 0.8) * js_kb * 1024) + 300,
            "chromium_priority": weighted(
                rng, [("high", 0.3), ("medium", 0.2), ("low", 0.5)]),
        }
        # Some scripts are discovered by earlier scripts.
        if scripts and rng.random() < 0.3:
            entry["requested_after"] = rng.choice(scripts)
        resources.append(entry)
        scripts.append(rid)

    for k in range(n_images):
        rid = f"img{k}"
        ext = rng.choice(IMAGE_EXT)
        entry = {
            "resource_id": rid,
            "url_path": f"/media/{rid}.{ext}",
            "rtype": "image",
            "size_bytes": int(rng.lognormvariate(0, 0.9) * img_kb * 1024) + 150,
            "chromium_priority": weighted(
                rng, [("high", 0.25), ("medium", 0.15), ("low", 0.6)]),
        }
        if rng.random() < 0.2:
            entry["requested_after"] = rng.choice(sheets)
        resources.append(entry)

    for k in range(n_other):
        rid = f"other{k}"
        is_font = k % 2 == 0
        entry = {
            "resource_id": rid,
            "url_path": f"/static/fonts/{rid}.woff2" if is_font
            else f"/api/{rid}.json",
            "rtype": "other",
            "size_bytes": int(rng.lognormvariate(0, 0.5) * 16 * 1024) + 100,
            "chromium_priority": "very_low",
        }
        if is_font:
            entry["requested_after"] = rng.choice(sheets)
        resources.append(entry)

    return {
        "schema_version": 1,
        "site_name": site,
        "synthetic": True,
        "resources": resources,
    }


def main():
    out_dir = pathlib.Path(sys.argv[1] if len(sys.argv) > 1 else
                           pathlib.Path(__file__).parent.parent / "data" /
                           "manifests")
    out_dir.mkdir(parents=True, exist_ok=True)
    for order, site in enumerate(SITES, start=1):
        manifest = build(*site)
        path = out_dir / f"{order:02d}_{site[0]}.json"
        path.write_text(json.dumps(manifest, indent=2) + "\n")


if __name__ == "__main__":
    main()
