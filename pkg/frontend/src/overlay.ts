// Read-only bounding-box overlay: normalized layout boxes drawn over the
// background image with character labels and z-order.

import type { LayoutView } from "./types.js";

export interface PixelRect {
  left: number;
  top: number;
  width: number;
  height: number;
}

export function bboxToPixelRect(
  bbox: [number, number, number, number],
  canvasWidth: number,
  canvasHeight: number,
): PixelRect {
  const [xMin, yMin, xMax, yMax] = bbox;
  return {
    left: Math.round(xMin * canvasWidth),
    top: Math.round(yMin * canvasHeight),
    width: Math.round((xMax - xMin) * canvasWidth),
    height: Math.round((yMax - yMin) * canvasHeight),
  };
}

export function renderLayoutOverlay(
  container: HTMLElement,
  imageUrl: string,
  layouts: LayoutView[],
  size: { width: number; height: number },
): void {
  container.textContent = "";
  container.classList.add("overlay");
  container.style.position = "relative";
  container.style.width = `${size.width}px`;
  container.style.height = `${size.height}px`;

  const image = document.createElement("img");
  image.src = imageUrl;
  image.width = size.width;
  image.height = size.height;
  image.alt = "scene background";
  container.appendChild(image);

  for (const layout of [...layouts].sort((a, b) => a.z_order - b.z_order)) {
    const rect = bboxToPixelRect(layout.bbox, size.width, size.height);
    const box = document.createElement("div");
    box.className = "overlay-box";
    box.dataset.characterId = layout.character_id;
    box.dataset.zOrder = String(layout.z_order);
    box.style.position = "absolute";
    box.style.left = `${rect.left}px`;
    box.style.top = `${rect.top}px`;
    box.style.width = `${rect.width}px`;
    box.style.height = `${rect.height}px`;

    const label = document.createElement("span");
    label.className = "overlay-label";
    label.textContent = `${layout.character_id} (z${layout.z_order})`;
    box.appendChild(label);
    container.appendChild(box);
  }
}
