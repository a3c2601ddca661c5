/** QR rendering for credential payloads (client-side, from server-provided text). */

import QRCode from "qrcode";

/** Inline SVG markup for a QR code of `text`. */
export async function qrSvg(text: string): Promise<string> {
  return QRCode.toString(text, { type: "svg", margin: 2, width: 240 });
}
