/** three.js scene wrapper: renders the vessel, the picked-vertex marker,
 * the ring polyline, and the preview/assembled overlays. All geometry
 * comes from backend payloads via geometry.ts. */

import * as THREE from "three";
import { OrbitControls } from "three/addons/controls/OrbitControls.js";
import type { MeshPayload } from "./api.js";
import { payloadToGeometry, ringToGeometry } from "./geometry.js";
import { pickVertex } from "./picking.js";

const VESSEL_COLOR = 0x8899cc;
const SAC_COLOR = 0xcc5555;
const RING_COLOR = 0x22cc44;
const MARKER_COLOR = 0xffcc00;

export class Viewer {
  private renderer: THREE.WebGLRenderer;
  private scene = new THREE.Scene();
  private camera: THREE.PerspectiveCamera;
  private controls: OrbitControls;
  private vesselMesh: THREE.Mesh | null = null;
  private sacMesh: THREE.Mesh | null = null;
  private labeledMesh: THREE.Mesh | null = null;
  private ringLine: THREE.Line | null = null;
  private marker: THREE.Mesh;

  constructor(private canvas: HTMLCanvasElement) {
    this.renderer = new THREE.WebGLRenderer({ canvas, antialias: true });
    this.camera = new THREE.PerspectiveCamera(
      45,
      canvas.clientWidth / canvas.clientHeight,
      0.01,
      1000,
    );
    this.camera.position.set(0, 0, 30);
    this.controls = new OrbitControls(this.camera, canvas);
    this.scene.background = new THREE.Color(0x14161c);
    this.scene.add(new THREE.AmbientLight(0xffffff, 0.45));
    const key = new THREE.DirectionalLight(0xffffff, 1.2);
    key.position.set(1, 1, 2);
    this.scene.add(key);
    const fill = new THREE.DirectionalLight(0xffffff, 0.4);
    fill.position.set(-2, -1, -1);
    this.scene.add(fill);
    this.marker = new THREE.Mesh(
      new THREE.SphereGeometry(1, 16, 12),
      new THREE.MeshBasicMaterial({ color: MARKER_COLOR }),
    );
    this.marker.visible = false;
    this.scene.add(this.marker);
    const animate = () => {
      requestAnimationFrame(animate);
      this.resize();
      this.controls.update();
      this.renderer.render(this.scene, this.camera);
    };
    animate();
  }

  private resize(): void {
    const w = this.canvas.clientWidth;
    const h = this.canvas.clientHeight;
    const size = new THREE.Vector2();
    this.renderer.getSize(size);
    if (size.x !== w || size.y !== h) {
      this.renderer.setSize(w, h, false);
      this.camera.aspect = w / h;
      this.camera.updateProjectionMatrix();
    }
  }

  private dispose(obj: THREE.Mesh | THREE.Line | null): void {
    if (obj === null) return;
    this.scene.remove(obj);
    obj.geometry.dispose();
  }

  setVessel(payload: MeshPayload): void {
    this.dispose(this.vesselMesh);
    this.clearOverlays();
    const geom = payloadToGeometry(payload);
    this.vesselMesh = new THREE.Mesh(
      geom,
      new THREE.MeshStandardMaterial({
        color: VESSEL_COLOR,
        roughness: 0.6,
        metalness: 0.05,
      }),
    );
    this.scene.add(this.vesselMesh);
    geom.computeBoundingSphere();
    const bs = geom.boundingSphere!;
    this.camera.position
      .copy(bs.center)
      .add(new THREE.Vector3(0, 0, bs.radius * 2.8));
    this.controls.target.copy(bs.center);
    this.marker.scale.setScalar(bs.radius * 0.015);
  }

  clearOverlays(): void {
    this.dispose(this.sacMesh);
    this.sacMesh = null;
    this.dispose(this.labeledMesh);
    this.labeledMesh = null;
    this.dispose(this.ringLine);
    this.ringLine = null;
    this.marker.visible = false;
  }

  setMarker(position: [number, number, number]): void {
    this.marker.position.set(...position);
    this.marker.visible = true;
  }

  setRing(points: [number, number, number][]): void {
    this.dispose(this.ringLine);
    this.ringLine = new THREE.Line(
      ringToGeometry(points),
      new THREE.LineBasicMaterial({ color: RING_COLOR, linewidth: 2 }),
    );
    this.scene.add(this.ringLine);
  }

  setSacPreview(payload: MeshPayload): void {
    this.dispose(this.sacMesh);
    this.sacMesh = new THREE.Mesh(
      payloadToGeometry(payload),
      new THREE.MeshStandardMaterial({
        color: SAC_COLOR,
        roughness: 0.55,
        transparent: true,
        opacity: 0.92,
      }),
    );
    this.scene.add(this.sacMesh);
    if (this.vesselMesh) (this.vesselMesh.material as THREE.Material).visible = true;
  }

  /** Assembled mesh with per-vertex label colors; hides the construction
   * geometry (separate vessel, sac, ring). */
  setLabeledMesh(payload: MeshPayload, labels: number[]): void {
    this.clearOverlays();
    if (this.vesselMesh) this.vesselMesh.visible = false;
    this.dispose(this.labeledMesh);
    this.labeledMesh = new THREE.Mesh(
      payloadToGeometry(payload, labels),
      new THREE.MeshStandardMaterial({ vertexColors: true, roughness: 0.6 }),
    );
    this.scene.add(this.labeledMesh);
  }

  showVessel(): void {
    if (this.vesselMesh) this.vesselMesh.visible = true;
    this.dispose(this.labeledMesh);
    this.labeledMesh = null;
  }

  /** Pick the vessel vertex under a pointer event, or null on a miss. */
  pick(event: { clientX: number; clientY: number }): number | null {
    if (this.vesselMesh === null || !this.vesselMesh.visible) return null;
    const rect = this.canvas.getBoundingClientRect();
    const ndc = {
      x: ((event.clientX - rect.left) / rect.width) * 2 - 1,
      y: -((event.clientY - rect.top) / rect.height) * 2 + 1,
    };
    return pickVertex(ndc, this.camera, this.vesselMesh);
  }
}
