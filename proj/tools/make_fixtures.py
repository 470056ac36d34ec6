#!/usr/bin/env python3
"""Regenerates the fixtures under data/.

Test images are luminance crops of images shipped with sporco and
scikit-image. Text masks are rendered lines of DejaVu Sans Bold, 255 where the
pixel is observed and 0 under the text.

    python3 tools/make_fixtures.py --sporco-data DIR --out data
"""
import argparse
from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw, ImageFont

FONT = "/usr/share/fonts/truetype/dejavu/DejaVuSans-Bold.ttf"
LINES = ["Image restoration", "removes text from", "pictures, one pixel", "at a time 0123456789",
         "THE QUICK BROWN FOX", "jumps over the lazy", "dog near the river", "bank at sunset."]


def luminance(img):
    a = np.asarray(img.convert("RGB"), dtype=np.float64)
    y = 0.299 * a[..., 0] + 0.587 * a[..., 1] + 0.114 * a[..., 2]
    return Image.fromarray(np.clip(np.floor(y + 0.5), 0, 255).astype(np.uint8))


def text_mask(size):
    img = Image.new("L", (size, size), 255)
    draw = ImageDraw.Draw(img)
    font = ImageFont.truetype(FONT, size // 16)
    pitch = size // len(LINES)
    for i, line in enumerate(LINES):
        draw.text((size // 32, i * pitch + pitch // 5), line, fill=0, font=font)
    return img


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--sporco-data", type=Path, help="directory holding sporco's barbara.png and monarch.png")
    ap.add_argument("--out", type=Path, default=Path("data"))
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    masks = args.out / "masks"
    masks.mkdir(exist_ok=True)
    for size in (256, 512):
        text_mask(size).save(masks / f"text_{size}x{size}.png")

    if args.sporco_data:
        barbara = luminance(Image.open(args.sporco_data / "barbara.png"))
        barbara.crop((140, 31, 140 + 512, 31 + 512)).save(args.out / "barbara.png")
        monarch = luminance(Image.open(args.sporco_data / "monarch.png"))
        monarch.crop((300, 150, 300 + 256, 150 + 256)).save(args.out / "butterfly.png")

    from skimage import data
    cam = np.asarray(data.camera(), dtype=np.float64)
    cam = cam.reshape(256, 2, 256, 2).mean(axis=(1, 3))
    Image.fromarray(np.clip(np.floor(cam + 0.5), 0, 255).astype(np.uint8)).save(args.out / "cameraman.png")


if __name__ == "__main__":
    main()
