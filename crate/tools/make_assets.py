"""Regenerates the bundled host and watermark images under assets/.

The host is a synthetic still life (shaded fruit shapes over a textured
cloth and a smooth backdrop); the watermark is a 64x64 grayscale logo whose
binarization at 128 is close to half ones.
"""
import numpy as np
from PIL import Image, ImageDraw, ImageFont

rng = np.random.default_rng(20121)
N = 512
yy, xx = np.mgrid[0:N, 0:N].astype(np.float64)


def fractal_noise(octaves=6):
    out = np.zeros((N, N))
    amp = 1.0
    for o in range(octaves):
        cells = 4 * 2 ** o
        grid = rng.standard_normal((cells + 1, cells + 1))
        img = Image.fromarray(grid.astype(np.float32), mode="F").resize((N, N), Image.BICUBIC)
        out += amp * np.asarray(img, dtype=np.float64)
        amp *= 0.55
    return out / np.abs(out).max()


noise = fractal_noise()
fine = fractal_noise()

# backdrop: warm vertical gradient
r = 150 + 60 * (1 - yy / N) + 10 * noise
g = 120 + 40 * (1 - yy / N) + 10 * noise
b = 90 + 50 * (xx / N) + 12 * noise

# tablecloth in the lower third: woven stripes
cloth = yy > 330
weave = 18 * np.sin(xx / 3.1) * np.sin(yy / 2.7) + 25 * np.sign(np.sin(xx / 11.0)) + 14 * fine
r = np.where(cloth, 170 + weave, r)
g = np.where(cloth, 160 + weave, g)
b = np.where(cloth, 150 + weave, b)

fruits = [(150, 300, 95, 120, (200, 190, 70)), (300, 280, 85, 110, (170, 200, 80)),
          (410, 330, 70, 90, (210, 160, 60)), (240, 380, 60, 70, (190, 120, 70))]
for cx, cy, ax, ay, col in fruits:
    d = ((xx - cx) / ax) ** 2 + ((yy - cy) / ay) ** 2
    inside = d < 1
    shade = 0.55 + 0.45 * np.clip(1 - ((xx - cx + ax * 0.35) ** 2 + (yy - cy + ay * 0.4) ** 2) / (ax * ay * 1.6), 0, 1)
    speck = 8 * fine + 5 * rng.standard_normal((N, N))
    r = np.where(inside, col[0] * shade + speck, r)
    g = np.where(inside, col[1] * shade + speck, g)
    b = np.where(inside, col[2] * shade + 40 + speck, b)

sensor = rng.normal(0, 2.0, (3, N, N))
rgb = np.stack([r, g, b]) + sensor
rgb = np.clip(np.rint(rgb), 12, 243).astype(np.uint8)
Image.fromarray(np.moveaxis(rgb, 0, -1), mode="RGB").save("assets/host.png")

# watermark: gray logo, ring + bars + diagonal, tuned to ~50% bright pixels
wm = Image.new("L", (64, 64), 40)
d = ImageDraw.Draw(wm)
d.ellipse((4, 4, 59, 59), fill=210)
d.ellipse((16, 16, 47, 47), fill=60)
d.rectangle((0, 28, 63, 35), fill=230)
d.polygon([(20, 20), (44, 20), (32, 44)], fill=190)
arr = np.asarray(wm, dtype=np.float64) + rng.normal(0, 6, (64, 64))
arr = np.clip(np.rint(arr), 0, 255).astype(np.uint8)
Image.fromarray(arr, mode="L").save("assets/watermark.png")
print("ones fraction:", (arr >= 128).mean(), "host blue range:", rgb[2].min(), rgb[2].max())
