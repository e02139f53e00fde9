//! Matrix/TRC RGB profiles: binary parsing and encoding.
//!
//! Only the tags needed for a matrix/TRC transform are read: `desc`, `wtpt`,
//! `rXYZ`/`gXYZ`/`bXYZ` and `rTRC`/`gTRC`/`bTRC`. All multi-byte values are
//! big-endian; XYZ values use the s15Fixed16 encoding.

use super::curve::ToneCurve;
use super::matrix::{Mat3, Vec3, D50};
use crate::error::{Error, Result};

const HEADER_LEN: usize = 128;
const MAGIC: &[u8; 4] = b"acsp";

/// Tags every supported profile must carry.
pub const REQUIRED_TAGS: [&[u8; 4]; 8] = [
    b"desc", b"wtpt", b"rXYZ", b"gXYZ", b"bXYZ", b"rTRC", b"gTRC", b"bTRC",
];

/// A validated matrix/TRC RGB profile.
#[derive(Debug, Clone, PartialEq)]
pub struct IccProfile {
    name: String,
    white_point: Vec3,
    colorants: Mat3,
    inverse: Mat3,
    trc: [ToneCurve; 3],
}

impl IccProfile {
    /// Builds a profile from its parts. `colorants` has the red, green and blue
    /// primaries (in PCS XYZ) as columns.
    pub fn from_parts(
        name: impl Into<String>,
        white_point: Vec3,
        colorants: Mat3,
        trc: [ToneCurve; 3],
    ) -> Result<Self> {
        let inverse = colorants
            .inverse()
            .filter(|inv| (colorants.norm_inf() * inv.norm_inf()).is_finite())
            .ok_or_else(|| Error::Validation("colorant matrix is singular".into()))?;
        Ok(Self {
            name: name.into(),
            white_point,
            colorants,
            inverse,
            trc,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn white_point(&self) -> Vec3 {
        self.white_point
    }

    /// Device-linear RGB → PCS XYZ.
    pub fn colorants(&self) -> &Mat3 {
        &self.colorants
    }

    /// PCS XYZ → device-linear RGB.
    pub fn inverse_colorants(&self) -> &Mat3 {
        &self.inverse
    }

    pub fn trc(&self) -> &[ToneCurve; 3] {
        &self.trc
    }

    /// Device RGB → PCS XYZ.
    pub fn to_pcs(&self, rgb: Vec3) -> Vec3 {
        self.colorants.apply([
            self.trc[0].eval(rgb[0]),
            self.trc[1].eval(rgb[1]),
            self.trc[2].eval(rgb[2]),
        ])
    }

    /// PCS XYZ → device RGB, clipping out-of-gamut values.
    pub fn from_pcs(&self, xyz: Vec3) -> Vec3 {
        let lin = self.inverse.apply(xyz);
        [
            self.trc[0].invert(lin[0].clamp(0.0, 1.0)),
            self.trc[1].invert(lin[1].clamp(0.0, 1.0)),
            self.trc[2].invert(lin[2].clamp(0.0, 1.0)),
        ]
    }

    /// Parses an ICC v2/v4 matrix/TRC RGB profile.
    pub fn parse(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN + 4 {
            return Err(Error::Format(format!("{} bytes is too short for a profile", bytes.len())));
        }
        let declared = be_u32(bytes, 0)? as usize;
        if declared > bytes.len() || declared < HEADER_LEN + 4 {
            return Err(Error::Format(format!(
                "declared size {declared} does not fit the {} available bytes",
                bytes.len()
            )));
        }
        let bytes = &bytes[..declared];
        if &bytes[36..40] != MAGIC {
            return Err(Error::Format("missing 'acsp' signature".into()));
        }
        if &bytes[16..20] != b"RGB " {
            return Err(Error::UnsupportedProfile(format!(
                "data color space {:?} is not RGB",
                String::from_utf8_lossy(&bytes[16..20])
            )));
        }
        if &bytes[20..24] != b"XYZ " {
            return Err(Error::UnsupportedProfile("only XYZ connection spaces are supported".into()));
        }

        let count = be_u32(bytes, HEADER_LEN)? as usize;
        let table_end = HEADER_LEN + 4 + count * 12;
        if table_end > bytes.len() {
            return Err(Error::Format(format!("tag table of {count} entries overruns the profile")));
        }
        let mut tags = Vec::with_capacity(count);
        for i in 0..count {
            let at = HEADER_LEN + 4 + i * 12;
            let sig: [u8; 4] = bytes[at..at + 4].try_into().expect("4-byte slice");
            let offset = be_u32(bytes, at + 4)? as usize;
            let size = be_u32(bytes, at + 8)? as usize;
            let data = offset
                .checked_add(size)
                .filter(|&end| end <= bytes.len() && size >= 8)
                .map(|end| &bytes[offset..end])
                .ok_or_else(|| {
                    Error::Format(format!("tag {} points outside the profile", sig_str(&sig)))
                })?;
            tags.push((sig, data));
        }
        let tag = |sig: &[u8; 4]| {
            tags.iter()
                .find(|(s, _)| s == sig)
                .map(|(_, d)| *d)
                .ok_or_else(|| Error::UnsupportedProfile(format!("missing required tag '{}'", sig_str(sig))))
        };
        for sig in REQUIRED_TAGS {
            tag(sig)?;
        }

        let name = parse_text(tag(b"desc")?)?;
        let white_point = parse_xyz(tag(b"wtpt")?)?;
        let colorants = Mat3::from_columns(
            parse_xyz(tag(b"rXYZ")?)?,
            parse_xyz(tag(b"gXYZ")?)?,
            parse_xyz(tag(b"bXYZ")?)?,
        );
        let trc = [
            parse_curve(tag(b"rTRC")?)?,
            parse_curve(tag(b"gTRC")?)?,
            parse_curve(tag(b"bTRC")?)?,
        ];
        Self::from_parts(name, white_point, colorants, trc)
    }

    /// Encodes the profile as an ICC v4.3 display profile.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut entries: Vec<([u8; 4], Vec<u8>)> = vec![
            (*b"desc", encode_mluc(&self.name)),
            (*b"wtpt", encode_xyz(self.white_point)),
            (*b"rXYZ", encode_xyz(self.colorants.column(0))),
            (*b"gXYZ", encode_xyz(self.colorants.column(1))),
            (*b"bXYZ", encode_xyz(self.colorants.column(2))),
        ];
        for (sig, curve) in [b"rTRC", b"gTRC", b"bTRC"].into_iter().zip(&self.trc) {
            entries.push((*sig, encode_curve(curve)));
        }

        let table_len = 4 + entries.len() * 12;
        let mut body = Vec::new();
        let mut table = Vec::with_capacity(table_len);
        table.extend_from_slice(&(entries.len() as u32).to_be_bytes());
        // identical payloads share one data block, as most real profiles do
        let mut placed: Vec<(usize, usize)> = Vec::new();
        for (i, (sig, data)) in entries.iter().enumerate() {
            let shared = entries[..i]
                .iter()
                .position(|(_, d)| d == data)
                .map(|j| placed[j]);
            let (offset, len) = shared.unwrap_or_else(|| {
                let offset = HEADER_LEN + table_len + body.len();
                body.extend_from_slice(data);
                while body.len() % 4 != 0 {
                    body.push(0);
                }
                (offset, data.len())
            });
            placed.push((offset, len));
            table.extend_from_slice(sig);
            table.extend_from_slice(&(offset as u32).to_be_bytes());
            table.extend_from_slice(&(len as u32).to_be_bytes());
        }

        let total = HEADER_LEN + table.len() + body.len();
        let mut out = Vec::with_capacity(total);
        out.extend_from_slice(&(total as u32).to_be_bytes());
        out.extend_from_slice(&[0; 4]); // preferred CMM
        out.extend_from_slice(&0x0430_0000u32.to_be_bytes());
        out.extend_from_slice(b"mntr");
        out.extend_from_slice(b"RGB ");
        out.extend_from_slice(b"XYZ ");
        for v in [2024u16, 1, 1, 0, 0, 0] {
            out.extend_from_slice(&v.to_be_bytes());
        }
        out.extend_from_slice(MAGIC);
        out.resize(64, 0); // platform, flags, manufacturer, model, attributes
        out.extend_from_slice(&0u32.to_be_bytes()); // rendering intent
        for v in D50 {
            out.extend_from_slice(&s15_fixed16(v).to_be_bytes());
        }
        out.resize(HEADER_LEN, 0);
        out.extend_from_slice(&table);
        out.extend_from_slice(&body);
        out
    }
}

fn sig_str(sig: &[u8; 4]) -> String {
    String::from_utf8_lossy(sig).into_owned()
}

fn be_u32(bytes: &[u8], at: usize) -> Result<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes(b.try_into().expect("4-byte slice")))
        .ok_or_else(|| Error::Format(format!("unexpected end of data at offset {at}")))
}

fn be_u16(bytes: &[u8], at: usize) -> Result<u16> {
    bytes
        .get(at..at + 2)
        .map(|b| u16::from_be_bytes([b[0], b[1]]))
        .ok_or_else(|| Error::Format(format!("unexpected end of data at offset {at}")))
}

/// Decodes an s15Fixed16Number.
pub fn from_s15_fixed16(raw: i32) -> f64 {
    f64::from(raw) / 65536.0
}

/// Encodes an s15Fixed16Number (round to nearest).
pub fn s15_fixed16(v: f64) -> i32 {
    (v * 65536.0).round() as i32
}

fn parse_xyz(data: &[u8]) -> Result<Vec3> {
    if &data[..4] != b"XYZ " || data.len() < 20 {
        return Err(Error::Format("malformed XYZ tag".into()));
    }
    let mut out = [0.0; 3];
    for (i, v) in out.iter_mut().enumerate() {
        *v = from_s15_fixed16(be_u32(data, 8 + 4 * i)? as i32);
    }
    Ok(out)
}

fn parse_curve(data: &[u8]) -> Result<ToneCurve> {
    match &data[..4] {
        b"curv" => {
            let n = be_u32(data, 8)? as usize;
            match n {
                0 => ToneCurve::gamma(1.0),
                // u8Fixed8Number
                1 => ToneCurve::gamma(f64::from(be_u16(data, 12)?) / 256.0),
                _ => {
                    let samples = (0..n)
                        .map(|i| be_u16(data, 12 + 2 * i).map(|v| f64::from(v) / 65535.0))
                        .collect::<Result<Vec<_>>>()?;
                    ToneCurve::sampled(samples)
                }
            }
        }
        b"para" => {
            let kind = be_u16(data, 8)?;
            let n = match kind {
                0 => 1,
                1 => 3,
                2 => 4,
                3 => 5,
                4 => 7,
                _ => return Err(Error::UnsupportedProfile(format!("parametric curve type {kind}"))),
            };
            let params = (0..n)
                .map(|i| be_u32(data, 12 + 4 * i).map(|v| from_s15_fixed16(v as i32)))
                .collect::<Result<Vec<_>>>()?;
            if kind == 0 {
                ToneCurve::gamma(params[0])
            } else {
                ToneCurve::parametric(kind, params)
            }
        }
        other => Err(Error::UnsupportedProfile(format!(
            "tone curve type '{}'",
            String::from_utf8_lossy(other)
        ))),
    }
}

fn parse_text(data: &[u8]) -> Result<String> {
    let text = match &data[..4] {
        b"desc" => {
            let n = be_u32(data, 8)? as usize;
            let raw = data
                .get(12..12 + n)
                .ok_or_else(|| Error::Format("truncated description".into()))?;
            String::from_utf8_lossy(raw).trim_end_matches('\0').to_string()
        }
        b"text" => String::from_utf8_lossy(&data[8..]).trim_end_matches('\0').to_string(),
        b"mluc" => {
            let records = be_u32(data, 8)?;
            if records == 0 {
                return Ok(String::new());
            }
            let len = be_u32(data, 20)? as usize;
            let offset = be_u32(data, 24)? as usize;
            let raw = data
                .get(offset..offset + len)
                .ok_or_else(|| Error::Format("truncated localized description".into()))?;
            let units: Vec<u16> = raw.chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]])).collect();
            String::from_utf16_lossy(&units)
        }
        other => {
            return Err(Error::UnsupportedProfile(format!(
                "description type '{}'",
                String::from_utf8_lossy(other)
            )))
        }
    };
    Ok(text)
}

fn encode_xyz(v: Vec3) -> Vec<u8> {
    let mut out = b"XYZ \0\0\0\0".to_vec();
    for c in v {
        out.extend_from_slice(&s15_fixed16(c).to_be_bytes());
    }
    out
}

fn encode_mluc(text: &str) -> Vec<u8> {
    let units: Vec<u16> = text.encode_utf16().collect();
    let mut out = b"mluc\0\0\0\0".to_vec();
    out.extend_from_slice(&1u32.to_be_bytes());
    out.extend_from_slice(&12u32.to_be_bytes());
    out.extend_from_slice(b"enUS");
    out.extend_from_slice(&((units.len() * 2) as u32).to_be_bytes());
    out.extend_from_slice(&28u32.to_be_bytes());
    for u in units {
        out.extend_from_slice(&u.to_be_bytes());
    }
    out
}

fn encode_curve(curve: &ToneCurve) -> Vec<u8> {
    match curve {
        // a single-entry curv only keeps 8 fractional bits of the exponent
        ToneCurve::Gamma(g) => {
            let mut out = b"para\0\0\0\0\0\0\0\0".to_vec();
            out.extend_from_slice(&s15_fixed16(*g).to_be_bytes());
            out
        }
        ToneCurve::Sampled(t) => {
            let mut out = b"curv\0\0\0\0".to_vec();
            out.extend_from_slice(&(t.len() as u32).to_be_bytes());
            for v in t {
                out.extend_from_slice(&((v.clamp(0.0, 1.0) * 65535.0).round() as u16).to_be_bytes());
            }
            out
        }
        ToneCurve::Parametric { kind, params, .. } => {
            let mut out = b"para\0\0\0\0".to_vec();
            out.extend_from_slice(&kind.to_be_bytes());
            out.extend_from_slice(&[0, 0]);
            for &p in params {
                out.extend_from_slice(&s15_fixed16(p).to_be_bytes());
            }
            out
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear_profile() -> IccProfile {
        let id = ToneCurve::gamma(1.0).unwrap();
        IccProfile::from_parts(
            "linear",
            D50,
            Mat3::diag(D50),
            [id.clone(), id.clone(), id],
        )
        .unwrap()
    }

    #[test]
    fn encode_parse_round_trip() {
        let p = linear_profile();
        let parsed = IccProfile::parse(&p.to_bytes()).unwrap();
        assert_eq!(parsed.name(), "linear");
        for i in 0..3 {
            for j in 0..3 {
                assert!((parsed.colorants().0[i][j] - p.colorants().0[i][j]).abs() < 1e-4);
            }
        }
    }

    #[test]
    fn truncated_stream_is_a_format_error() {
        let bytes = linear_profile().to_bytes();
        for cut in [0, 10, 100, 131, bytes.len() - 1] {
            assert!(
                matches!(IccProfile::parse(&bytes[..cut]), Err(Error::Format(_))),
                "cut at {cut}"
            );
        }
    }

    #[test]
    fn bad_magic_is_a_format_error() {
        let mut bytes = linear_profile().to_bytes();
        bytes[36] = b'x';
        assert!(matches!(IccProfile::parse(&bytes), Err(Error::Format(_))));
    }

    #[test]
    fn missing_tag_is_unsupported() {
        let mut bytes = linear_profile().to_bytes();
        // rename the first tag entry ('desc') to something unknown
        bytes[132..136].copy_from_slice(b"zzzz");
        assert!(matches!(IccProfile::parse(&bytes), Err(Error::UnsupportedProfile(_))));
    }

    #[test]
    fn non_monotone_curve_fails_validation() {
        let bad = ToneCurve::Sampled(vec![0.0, 0.8, 0.4, 1.0]);
        let p = IccProfile {
            trc: [bad.clone(), bad.clone(), bad],
            ..linear_profile()
        };
        assert!(matches!(IccProfile::parse(&p.to_bytes()), Err(Error::Validation(_))));
    }

    #[test]
    fn singular_colorants_fail_validation() {
        let id = ToneCurve::gamma(1.0).unwrap();
        let flat = Mat3([[1.0, 1.0, 1.0], [1.0, 1.0, 1.0], [1.0, 1.0, 1.0]]);
        assert!(matches!(
            IccProfile::from_parts("flat", D50, flat, [id.clone(), id.clone(), id]),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn curve_tag_variants() {
        let mut zero = b"curv\0\0\0\0".to_vec();
        zero.extend_from_slice(&0u32.to_be_bytes());
        assert_eq!(parse_curve(&zero).unwrap(), ToneCurve::Gamma(1.0));
        let mut one = b"curv\0\0\0\0".to_vec();
        one.extend_from_slice(&1u32.to_be_bytes());
        one.extend_from_slice(&0x0233u16.to_be_bytes());
        assert_eq!(parse_curve(&one).unwrap(), ToneCurve::Gamma(563.0 / 256.0));
    }

    #[test]
    fn legacy_desc_tag() {
        let mut data = b"desc\0\0\0\0".to_vec();
        data.extend_from_slice(&5u32.to_be_bytes());
        data.extend_from_slice(b"sRGB\0");
        assert_eq!(parse_text(&data).unwrap(), "sRGB");
    }

    #[test]
    fn s15_fixed16_is_exact_on_representable_values() {
        for v in [-2.5, 0.0, 0.96420288, 1.0, 32767.0] {
            let q = from_s15_fixed16(s15_fixed16(v));
            assert!((q - v).abs() <= 0.5 / 65536.0);
        }
        assert_eq!(from_s15_fixed16(0x0000_F6D6), 0.964202880859375);
    }
}
