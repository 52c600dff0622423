// Browser entry point: binds the cockpit core to the DOM widgets.

import { Cockpit } from "./cockpit.js";
import { drawSkeleton } from "./render.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function wsUrl(): string {
  const proto = location.protocol === "https:" ? "wss:" : "ws:";
  const host = location.host || "127.0.0.1:8600";
  return `${proto}//${host}/ws`;
}

function init(): void {
  const canvas = el<HTMLCanvasElement>("skeleton");
  const ctx = canvas.getContext("2d")!;
  const banner = el<HTMLDivElement>("stale-banner");
  const roleSpan = el<HTMLSpanElement>("role");
  const errT = el<HTMLSpanElement>("err-t");
  const errR = el<HTMLSpanElement>("err-r");
  const latency = el<HTMLSpanElement>("latency");
  const seqSpan = el<HTMLSpanElement>("seq");
  const jointBox = el<HTMLDivElement>("joint-sliders");
  const poseBox = el<HTMLDivElement>("pose-sliders");
  const gripper = el<HTMLInputElement>("gripper");
  const modeSel = el<HTMLSelectElement>("mode");

  const socket = new WebSocket(wsUrl());
  const jointSliders: HTMLInputElement[] = [];
  const poseSliders: HTMLInputElement[] = [];

  const cockpit = new Cockpit(socket as never, {
    onHello: (hello) => {
      roleSpan.textContent = hello.role;
      hello.q_min.forEach((lo, i) => {
        const s = document.createElement("input");
        s.type = "range";
        s.min = String(lo);
        s.max = String(hello.q_max[i]);
        s.step = "0.01";
        s.value = "0";
        s.oninput = () => {
          cockpit.commandJoints(jointSliders.map((x) => Number(x.value)),
            Number(gripper.value));
        };
        const row = document.createElement("label");
        row.textContent = `q${i} `;
        row.appendChild(s);
        jointBox.appendChild(row);
        jointSliders.push(s);
      });
      const ws = hello.workspace;
      const axes = ["x", "y", "z", "roll", "pitch", "yaw"];
      axes.forEach((name, i) => {
        const s = document.createElement("input");
        s.type = "range";
        s.step = "0.005";
        if (i < 3) {
          s.min = String(ws.t_min[i]);
          s.max = String(ws.t_max[i]);
          s.value = String((ws.t_min[i] + ws.t_max[i]) / 2);
        } else {
          s.min = String(-ws.rpy_span[i - 3] / 2);
          s.max = String(ws.rpy_span[i - 3] / 2);
          s.value = "0";
        }
        s.oninput = () => {
          const vals = poseSliders.map((x) => Number(x.value));
          cockpit.commandPose(vals.slice(0, 3), vals.slice(3),
            Number(gripper.value));
        };
        const row = document.createElement("label");
        row.textContent = `${name} `;
        row.appendChild(s);
        poseBox.appendChild(row);
        poseSliders.push(s);
      });
    },
    onRender: (skeleton, state) => {
      drawSkeleton(ctx, skeleton, canvas.width, canvas.height);
      errT.textContent = state.err_t.toExponential(2);
      errR.textContent = state.err_r.toExponential(2);
      latency.textContent = `${state.latency_ms.toFixed(1)} ms`;
      seqSpan.textContent = String(state.seq);
    },
    onError: (message) => console.warn("bridge:", message),
  });

  gripper.oninput = () => cockpit.commandGripper(Number(gripper.value));
  modeSel.onchange = () =>
    cockpit.setMode(modeSel.value === "pose" ? "pose" : "joint");

  setInterval(() => {
    cockpit.pump();
    banner.style.display = cockpit.staleness.stale ? "block" : "none";
  }, 20);
}

window.addEventListener("DOMContentLoaded", init);
