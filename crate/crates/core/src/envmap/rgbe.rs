//! Radiance RGBE shared-exponent pixel codec.

use crate::math::Rgb;

/// Decodes one RGBE quadruple. Exponent byte zero is black; otherwise each
/// channel is `(mantissa / 256) · 2^(e − 128)`.
pub fn decode_rgbe(bytes: [u8; 4]) -> Rgb {
    let e = bytes[3];
    if e == 0 {
        return Rgb::BLACK;
    }
    let scale = libm_ldexp(1.0, e as i32 - (128 + 8));
    Rgb::new(
        bytes[0] as f64 * scale,
        bytes[1] as f64 * scale,
        bytes[2] as f64 * scale,
    )
}

/// Encodes a non-negative radiance triple. Mantissas are truncated, so
/// `encode_rgbe(decode_rgbe(b)) == b` for every normalized `b`.
pub fn encode_rgbe(p: Rgb) -> [u8; 4] {
    let v = p.max_channel();
    if !(v > 0.0) || !v.is_finite() {
        return [0, 0, 0, 0];
    }
    let (mantissa, exp) = frexp(v);
    if exp + 128 > 255 {
        return [255, 255, 255, 255];
    }
    if exp + 128 < 1 {
        return [0, 0, 0, 0];
    }
    let scale = mantissa * 256.0 / v;
    let q = |c: f64| (c.max(0.0) * scale).floor().min(255.0) as u8;
    [q(p.r), q(p.g), q(p.b), (exp + 128) as u8]
}

/// Splits `v > 0` into `m · 2^e` with `m ∈ [0.5, 1)`.
fn frexp(v: f64) -> (f64, i32) {
    debug_assert!(v > 0.0 && v.is_finite());
    let bits = v.to_bits();
    let raw_exp = ((bits >> 52) & 0x7ff) as i32;
    if raw_exp == 0 {
        // subnormal: renormalize first
        let (m, e) = frexp(v * 2f64.powi(64));
        return (m, e - 64);
    }
    let e = raw_exp - 1022;
    let m = f64::from_bits((bits & !(0x7ff << 52)) | (1022u64 << 52));
    (m, e)
}

fn libm_ldexp(x: f64, e: i32) -> f64 {
    x * 2f64.powi(e)
}
