// Equirectangular panorama viewer: drag to look around.
// WebGL path samples the texture along view rays; when WebGL is missing
// (tests, old machines) a 2D canvas fallback pans the image with yaw wrap.

export interface ViewAngles {
  yaw: number; // radians, wraps
  pitch: number; // radians, clamped
}

export const PITCH_LIMIT = Math.PI / 2 - 0.05;

/** Convert a mouse drag in pixels to a yaw/pitch change. */
export function applyDrag(
  view: ViewAngles,
  dxPx: number,
  dyPx: number,
  canvasWidth: number,
): ViewAngles {
  // dragging the full canvas width sweeps one full turn
  const perPixel = (2 * Math.PI) / Math.max(canvasWidth, 1);
  let yaw = view.yaw - dxPx * perPixel;
  yaw = ((yaw % (2 * Math.PI)) + 2 * Math.PI) % (2 * Math.PI);
  const pitch = Math.max(
    -PITCH_LIMIT,
    Math.min(PITCH_LIMIT, view.pitch + dyPx * perPixel),
  );
  return { yaw, pitch };
}

const VERTEX_SHADER = `
attribute vec2 position;
varying vec2 ndc;
void main() {
  ndc = position;
  gl_Position = vec4(position, 0.0, 1.0);
}`;

const FRAGMENT_SHADER = `
precision mediump float;
varying vec2 ndc;
uniform sampler2D panorama;
uniform float yaw;
uniform float pitch;
uniform float aspect;
uniform float fov;
void main() {
  float px = ndc.x * tan(fov * 0.5) * aspect;
  float py = ndc.y * tan(fov * 0.5);
  vec3 ray = normalize(vec3(px, py, -1.0));
  float cp = cos(pitch); float sp = sin(pitch);
  ray = vec3(ray.x, cp * ray.y - sp * ray.z, sp * ray.y + cp * ray.z);
  float cy = cos(yaw); float sy = sin(yaw);
  ray = vec3(cy * ray.x - sy * ray.z, ray.y, sy * ray.x + cy * ray.z);
  float lon = atan(ray.x, -ray.z);
  float lat = asin(clamp(ray.y, -1.0, 1.0));
  vec2 uv = vec2(0.5 + lon / (2.0 * 3.14159265), 0.5 - lat / 3.14159265);
  gl_FragColor = texture2D(panorama, uv);
}`;

export class PanoramaViewer {
  view: ViewAngles = { yaw: 0, pitch: 0 };
  private gl: WebGLRenderingContext | null = null;
  private ctx2d: CanvasRenderingContext2D | null = null;
  private image: HTMLImageElement | null = null;
  private uniforms: Record<string, WebGLUniformLocation | null> = {};
  private dragging = false;
  private lastX = 0;
  private lastY = 0;

  constructor(private canvas: HTMLCanvasElement) {
    this.gl = canvas.getContext("webgl") as WebGLRenderingContext | null;
    if (this.gl) {
      this.initGl(this.gl);
    } else {
      this.ctx2d = canvas.getContext("2d");
    }
    canvas.addEventListener("mousedown", (e) => this.startDrag(e.clientX, e.clientY));
    canvas.addEventListener("mousemove", (e) => this.moveDrag(e.clientX, e.clientY));
    window.addEventListener("mouseup", () => {
      this.dragging = false;
    });
  }

  private startDrag(x: number, y: number): void {
    this.dragging = true;
    this.lastX = x;
    this.lastY = y;
  }

  private moveDrag(x: number, y: number): void {
    if (!this.dragging) {
      return;
    }
    this.view = applyDrag(this.view, x - this.lastX, y - this.lastY, this.canvas.width);
    this.lastX = x;
    this.lastY = y;
    this.render();
  }

  async load(url: string): Promise<void> {
    const image = new Image();
    image.src = url;
    await image.decode();
    this.image = image;
    this.view = { yaw: 0, pitch: 0 };
    if (this.gl) {
      this.uploadTexture(this.gl, image);
    }
    this.render();
  }

  render(): void {
    if (this.gl && this.image) {
      const gl = this.gl;
      gl.viewport(0, 0, this.canvas.width, this.canvas.height);
      gl.uniform1f(this.uniforms.yaw, this.view.yaw);
      gl.uniform1f(this.uniforms.pitch, this.view.pitch);
      gl.uniform1f(this.uniforms.aspect, this.canvas.width / this.canvas.height);
      gl.uniform1f(this.uniforms.fov, Math.PI / 2);
      gl.drawArrays(gl.TRIANGLE_STRIP, 0, 4);
    } else if (this.ctx2d && this.image) {
      this.renderFallback(this.ctx2d, this.image);
    }
  }

  // 2D fallback: pan the equirect image horizontally with wraparound
  private renderFallback(
    ctx: CanvasRenderingContext2D,
    image: HTMLImageElement,
  ): void {
    const { width, height } = this.canvas;
    ctx.fillStyle = "#000";
    ctx.fillRect(0, 0, width, height);
    const scale = height / image.height;
    const drawWidth = image.width * scale;
    const yawFrac = this.view.yaw / (2 * Math.PI);
    let xOffset = -yawFrac * drawWidth;
    while (xOffset > 0) {
      xOffset -= drawWidth;
    }
    for (let x = xOffset; x < width; x += drawWidth) {
      ctx.drawImage(image, x, 0, drawWidth, height);
    }
  }

  private initGl(gl: WebGLRenderingContext): void {
    const program = gl.createProgram();
    if (!program) {
      return;
    }
    for (const [kind, source] of [
      [gl.VERTEX_SHADER, VERTEX_SHADER],
      [gl.FRAGMENT_SHADER, FRAGMENT_SHADER],
    ] as const) {
      const shader = gl.createShader(kind);
      if (!shader) {
        return;
      }
      gl.shaderSource(shader, source);
      gl.compileShader(shader);
      gl.attachShader(program, shader);
    }
    gl.linkProgram(program);
    gl.useProgram(program);
    const quad = new Float32Array([-1, -1, 1, -1, -1, 1, 1, 1]);
    const buffer = gl.createBuffer();
    gl.bindBuffer(gl.ARRAY_BUFFER, buffer);
    gl.bufferData(gl.ARRAY_BUFFER, quad, gl.STATIC_DRAW);
    const position = gl.getAttribLocation(program, "position");
    gl.enableVertexAttribArray(position);
    gl.vertexAttribPointer(position, 2, gl.FLOAT, false, 0, 0);
    for (const name of ["yaw", "pitch", "aspect", "fov"]) {
      this.uniforms[name] = gl.getUniformLocation(program, name);
    }
  }

  private uploadTexture(gl: WebGLRenderingContext, image: HTMLImageElement): void {
    const texture = gl.createTexture();
    gl.bindTexture(gl.TEXTURE_2D, texture);
    gl.texImage2D(gl.TEXTURE_2D, 0, gl.RGBA, gl.RGBA, gl.UNSIGNED_BYTE, image);
    gl.texParameteri(gl.TEXTURE_2D, gl.TEXTURE_MIN_FILTER, gl.LINEAR);
    gl.texParameteri(gl.TEXTURE_2D, gl.TEXTURE_WRAP_S, gl.REPEAT);
    gl.texParameteri(gl.TEXTURE_2D, gl.TEXTURE_WRAP_T, gl.CLAMP_TO_EDGE);
  }
}
