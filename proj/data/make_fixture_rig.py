#!/usr/bin/env python3
"""Generates fixture_rig.txt: a synthetic four-camera surround rig.

Cameras sit on a tall demo-vehicle mast (2.2 m) pitched steeply down so the
four of them cover nearly the whole 25 m x 25 m topview window.
"""
import numpy as np

F = 320.0
CX, CY = 639.5, 399.5
K = (-0.01, 0.0005, 0.0, 0.0)
FOV = 190.0
PITCH_DEG = 55.0

CAMS = [
    ("front", np.array([0.0, 1.9, 2.2]), np.array([0.0, 1.0])),
    ("rear", np.array([0.0, -2.3, 2.2]), np.array([0.0, -1.0])),
    ("left", np.array([-1.0, 0.0, 2.2]), np.array([-1.0, 0.0])),
    ("right", np.array([1.0, 0.0, 2.2]), np.array([1.0, 0.0])),
]


def rotation(heading, pitch_deg):
    p = np.deg2rad(pitch_deg)
    d = np.array([heading[0] * np.cos(p), heading[1] * np.cos(p), -np.sin(p)])
    z = np.array([0.0, 0.0, 1.0])
    x_cam = -np.cross(z, d)
    x_cam /= np.linalg.norm(x_cam)
    y_cam = np.cross(d, x_cam)
    return np.stack([x_cam, y_cam, d])  # rows: camera axes in ego coords


def main():
    lines = ["# slotkit fixture rig (synthetic, generated by make_fixture_rig.py)"]
    for name, pos, heading in CAMS:
        r = rotation(heading, PITCH_DEG)
        t = -r @ pos
        lines.append(f"camera {name}")
        lines.append("  image_size 1280 800")
        lines.append(f"  focal {F} {F}")
        lines.append(f"  principal {CX} {CY}")
        lines.append("  distortion " + " ".join(format(k, ".17g") for k in K))
        lines.append(f"  fov_deg {FOV}")
        lines.append("  rotation " + " ".join(format(v, ".17g") for v in r.flatten()))
        lines.append("  translation " + " ".join(format(v, ".17g") for v in t))
        lines.append("end")
    with open("fixture_rig.txt", "w") as f:
        f.write("\n".join(lines) + "\n")


if __name__ == "__main__":
    main()
