import { describe, expect, it } from "vitest";

import { DHRow, forwardKinematics } from "../src/math.js";
import fixtures from "./fixtures/fk_fixtures.json";

// Joint positions and end-effector orientation cross-checked against
// values exported from the host kinematics library.

const dh = fixtures.dh as DHRow[];

describe("forward kinematics vs host fixtures", () => {
  it("matches every joint origin within 1e-6", () => {
    for (const c of fixtures.cases) {
      const skel = forwardKinematics(dh, c.q);
      expect(skel.points.length).toBe(dh.length + 1);
      for (let j = 0; j < c.joints.length; j++) {
        const got = skel.points[j + 1];
        for (let k = 0; k < 3; k++) {
          expect(Math.abs(got[k] - c.joints[j][k])).toBeLessThan(1e-6);
        }
      }
    }
  });

  it("matches the end-effector quaternion up to sign within 1e-6", () => {
    for (const c of fixtures.cases) {
      const r = forwardKinematics(dh, c.q).r;
      const direct = Math.max(...r.map((v, i) => Math.abs(v - c.ee_r[i])));
      const flipped = Math.max(...r.map((v, i) => Math.abs(v + c.ee_r[i])));
      expect(Math.min(direct, flipped)).toBeLessThan(1e-6);
    }
  });

  it("starts at the base origin", () => {
    const skel = forwardKinematics(dh, [0, 0, 0, 0, 0]);
    expect(skel.points[0]).toEqual([0, 0, 0]);
  });

  it("rejects a joint vector of the wrong length", () => {
    expect(() => forwardKinematics(dh, [0, 0])).toThrow(/expected 5/);
  });
});
