// Quaternion kinematics mirroring the host library, so the cockpit can
// draw the arm from the DH table it receives in the hello handshake
// without any further round trips.

export type Quat = [number, number, number, number]; // [w, x, y, z]
export type Vec3 = [number, number, number];
export type DHRow = [number, number, number, number]; // [theta_off, d, a, alpha]

export function qmul(a: Quat, b: Quat): Quat {
  const [aw, ax, ay, az] = a;
  const [bw, bx, by, bz] = b;
  return [
    aw * bw - ax * bx - ay * by - az * bz,
    aw * bx + ax * bw + ay * bz - az * by,
    aw * by - ax * bz + ay * bw + az * bx,
    aw * bz + ax * by - ay * bx + az * bw,
  ];
}

export function qconj(a: Quat): Quat {
  return [a[0], -a[1], -a[2], -a[3]];
}

export function qnormalize(a: Quat): Quat {
  const n = Math.hypot(a[0], a[1], a[2], a[3]);
  return [a[0] / n, a[1] / n, a[2] / n, a[3] / n];
}

/** Rotate a 3-vector by a unit quaternion: vec(r * (0,v) * conj(r)). */
export function qrotate(r: Quat, v: Vec3): Vec3 {
  const p = qmul(qmul(r, [0, v[0], v[1], v[2]]), qconj(r));
  return [p[1], p[2], p[3]];
}

/** Pose of one standard-DH link: RotZ(theta) TransZ(d) TransX(a) RotX(alpha). */
function linkPose(row: DHRow, q: number): { r: Quat; t: Vec3 } {
  const [thetaOff, d, a, alpha] = row;
  const theta = q + thetaOff;
  const rz: Quat = [Math.cos(theta / 2), 0, 0, Math.sin(theta / 2)];
  const rx: Quat = [Math.cos(alpha / 2), Math.sin(alpha / 2), 0, 0];
  return {
    r: qmul(rz, rx),
    t: [a * Math.cos(theta), a * Math.sin(theta), d],
  };
}

export interface Skeleton {
  /** Origin of every link frame, base first, end effector last. */
  points: Vec3[];
  /** End-effector orientation. */
  r: Quat;
}

/** Forward kinematics over the whole chain, collecting every frame origin. */
export function forwardKinematics(dh: DHRow[], q: number[]): Skeleton {
  if (q.length !== dh.length) {
    throw new Error(`expected ${dh.length} joint values, got ${q.length}`);
  }
  let r: Quat = [1, 0, 0, 0];
  let t: Vec3 = [0, 0, 0];
  const points: Vec3[] = [[0, 0, 0]];
  for (let i = 0; i < dh.length; i++) {
    const link = linkPose(dh[i], q[i]);
    const step = qrotate(r, link.t);
    t = [t[0] + step[0], t[1] + step[1], t[2] + step[2]];
    r = qnormalize(qmul(r, link.r));
    points.push(t);
  }
  return { points, r };
}
