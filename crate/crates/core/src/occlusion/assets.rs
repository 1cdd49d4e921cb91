//! Mask textures and glasses styles used by the 3-D mask and glasses attacks.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::{load_image, save_image, Image, Rgb};
use crate::scalar::Scalar;

pub const MIN_TEXTURES: usize = 9;
pub const MIN_GLASSES: usize = 12;
const TEXTURE_SIZE: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LensShape {
    Rect,
    Ellipse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlassesStyle<T> {
    pub id: String,
    pub shape: LensShape,
    /// Growth factor applied to each eye's landmark box.
    pub scale: T,
    /// Lens opacity; 1.0 hides the eyes completely.
    pub alpha: T,
    pub color: [u8; 3],
}

impl<T: Scalar> GlassesStyle<T> {
    pub fn is_opaque(&self) -> bool {
        self.alpha >= T::one()
    }

    pub fn rgb(&self) -> Rgb {
        Rgb(self.color)
    }
}

/// Read-only registry of mask textures and glasses styles.
#[derive(Debug, Clone)]
pub struct AssetPack<T> {
    textures: BTreeMap<String, Image>,
    glasses: BTreeMap<String, GlassesStyle<T>>,
}

#[derive(Serialize, Deserialize)]
struct TextureEntry {
    id: String,
    path: PathBuf,
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
struct Manifest<T> {
    textures: Vec<TextureEntry>,
    glasses: Vec<GlassesStyle<T>>,
}

impl<T: Scalar> AssetPack<T> {
    pub fn new(textures: Vec<(String, Image)>, glasses: Vec<GlassesStyle<T>>) -> Result<Self> {
        let n_tex = textures.len();
        let n_gl = glasses.len();
        let mut tex_map = BTreeMap::new();
        for (id, img) in textures {
            if img.channels() != 3 {
                return Err(Error::InvalidAssets(format!("texture {id:?} is not RGB")));
            }
            tex_map.insert(id, img);
        }
        let mut gl_map = BTreeMap::new();
        for g in glasses {
            if !(g.scale > T::zero()) || !(g.alpha > T::zero() && g.alpha <= T::one()) {
                return Err(Error::InvalidAssets(format!(
                    "glasses style {:?} has bad scale/alpha",
                    g.id
                )));
            }
            gl_map.insert(g.id.clone(), g);
        }
        if tex_map.len() != n_tex || gl_map.len() != n_gl {
            return Err(Error::InvalidAssets("duplicate asset ids".into()));
        }
        if n_tex < MIN_TEXTURES || n_gl < MIN_GLASSES {
            return Err(Error::InvalidAssets(format!(
                "need >= {MIN_TEXTURES} textures and >= {MIN_GLASSES} glasses styles, found {n_tex} and {n_gl}"
            )));
        }
        Ok(Self {
            textures: tex_map,
            glasses: gl_map,
        })
    }

    /// Nine procedural textures (stripes, checker, value noise at three scales) and
    /// twelve glasses styles (rect/ellipse x three sizes x opaque/tinted).
    pub fn builtin() -> Self {
        let mut textures = Vec::new();
        for (i, p) in [4usize, 8, 16].into_iter().enumerate() {
            textures.push((format!("stripes-{p}"), stripes(p, i)));
        }
        for (i, c) in [4usize, 8, 16].into_iter().enumerate() {
            textures.push((format!("checker-{c}"), checker(c, i)));
        }
        for (i, s) in [2usize, 4, 8].into_iter().enumerate() {
            textures.push((format!("noise-{s}"), value_noise(s, 0x6d61_736b + i as u64)));
        }
        let mut glasses = Vec::new();
        for (shape, shape_name) in [(LensShape::Rect, "rect"), (LensShape::Ellipse, "ellipse")] {
            for (size, scale, tint) in [("s", 1.2, 0.4), ("m", 1.4, 0.5), ("l", 1.6, 0.6)] {
                glasses.push(GlassesStyle {
                    id: format!("{shape_name}-{size}-opaque"),
                    shape,
                    scale: T::lit(scale),
                    alpha: T::one(),
                    color: [25, 25, 25],
                });
                glasses.push(GlassesStyle {
                    id: format!("{shape_name}-{size}-tinted"),
                    shape,
                    scale: T::lit(scale),
                    alpha: T::lit(tint),
                    color: [60, 80, 110],
                });
            }
        }
        Self::new(textures, glasses).expect("builtin pack is valid")
    }

    /// Loads `{"textures":[{"id","path"}], "glasses":[{...}]}`; texture paths are
    /// relative to the manifest's directory.
    pub fn load(manifest: impl AsRef<Path>) -> Result<Self> {
        let manifest = manifest.as_ref();
        let text = fs::read_to_string(manifest).map_err(|e| Error::io(manifest, e))?;
        let m: Manifest<T> = serde_json::from_str(&text)?;
        let base = manifest.parent().unwrap_or(Path::new("."));
        let textures = m
            .textures
            .into_iter()
            .map(|t| Ok((t.id, load_image(base.join(&t.path))?)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(textures, m.glasses)
    }

    /// Writes every texture as PPM next to a `manifest.json`.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<PathBuf> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut entries = Vec::new();
        for (id, img) in &self.textures {
            let rel = PathBuf::from(format!("{id}.ppm"));
            save_image(img, dir.join(&rel))?;
            entries.push(TextureEntry {
                id: id.clone(),
                path: rel,
            });
        }
        let m = Manifest {
            textures: entries,
            glasses: self.glasses.values().cloned().collect(),
        };
        let path = dir.join("manifest.json");
        fs::write(&path, serde_json::to_string_pretty(&m)?).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }

    pub fn texture(&self, id: &str) -> Result<&Image> {
        self.textures
            .get(id)
            .ok_or_else(|| Error::UnknownTexture(id.to_string()))
    }

    pub fn glasses(&self, id: &str) -> Result<&GlassesStyle<T>> {
        self.glasses.get(id).ok_or_else(|| Error::UnknownStyle(id.to_string()))
    }

    pub fn texture_ids(&self) -> impl Iterator<Item = &str> {
        self.textures.keys().map(String::as_str)
    }

    pub fn glasses_ids(&self) -> impl Iterator<Item = &str> {
        self.glasses.keys().map(String::as_str)
    }
}

const PALETTES: [([u8; 3], [u8; 3]); 3] = [
    ([150, 190, 220], [235, 240, 245]),
    ([60, 60, 120], [200, 200, 210]),
    ([40, 110, 90], [220, 210, 160]),
];

fn from_fn(f: impl Fn(usize, usize) -> [u8; 3]) -> Image {
    let mut data = Vec::with_capacity(TEXTURE_SIZE * TEXTURE_SIZE * 3);
    for y in 0..TEXTURE_SIZE {
        for x in 0..TEXTURE_SIZE {
            data.extend_from_slice(&f(x, y));
        }
    }
    Image::rgb(TEXTURE_SIZE, TEXTURE_SIZE, data).expect("texture dims")
}

fn stripes(period: usize, palette: usize) -> Image {
    let (a, b) = PALETTES[palette];
    from_fn(|_, y| if (y / (period / 2)).is_multiple_of(2) { a } else { b })
}

fn checker(cell: usize, palette: usize) -> Image {
    let (a, b) = PALETTES[(palette + 1) % 3];
    from_fn(|x, y| if (x / cell + y / cell).is_multiple_of(2) { a } else { b })
}

fn value_noise(cell: usize, seed: u64) -> Image {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = TEXTURE_SIZE / cell + 2;
    let grid: Vec<f64> = (0..g * g).map(|_| rng.gen_range(-1.0..1.0)).collect();
    from_fn(|x, y| {
        let (fx, fy) = (x as f64 / cell as f64, y as f64 / cell as f64);
        let (ix, iy) = (fx.floor() as usize, fy.floor() as usize);
        let (tx, ty) = (fx - ix as f64, fy - iy as f64);
        let at = |i: usize, j: usize| grid[j * g + i];
        let v = (at(ix, iy) * (1.0 - tx) + at(ix + 1, iy) * tx) * (1.0 - ty)
            + (at(ix, iy + 1) * (1.0 - tx) + at(ix + 1, iy + 1) * tx) * ty;
        let base = [120.0, 160.0, 130.0];
        base.map(|b| (b + 60.0 * v).round().clamp(0.0, 255.0) as u8)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_inventory() {
        let pack = AssetPack::<f64>::builtin();
        assert_eq!(pack.texture_ids().count(), 9);
        assert_eq!(pack.glasses_ids().count(), 12);
        let opaque = pack
            .glasses_ids()
            .filter(|id| pack.glasses(id).unwrap().is_opaque())
            .count();
        assert_eq!(opaque, 6);
        for id in pack.glasses_ids() {
            let g = pack.glasses(id).unwrap();
            assert!(g.is_opaque() || (g.alpha >= 0.3 && g.alpha <= 0.7));
        }
        assert!(matches!(pack.glasses("nope"), Err(Error::UnknownStyle(_))));
        assert!(matches!(pack.texture("nope"), Err(Error::UnknownTexture(_))));
    }

    #[test]
    fn manifest_round_trip() {
        let pack = AssetPack::<f64>::builtin();
        let dir = tempfile::tempdir().unwrap();
        let manifest = pack.save(dir.path()).unwrap();
        let back = AssetPack::<f64>::load(&manifest).unwrap();
        assert_eq!(back.textures, pack.textures);
        assert_eq!(back.glasses, pack.glasses);
    }

    #[test]
    fn duplicate_and_short_packs_are_rejected() {
        let pack = AssetPack::<f64>::builtin();
        let mut tex: Vec<_> = pack.textures.iter().map(|(k, v)| (k.clone(), v.clone())).collect();
        let gl: Vec<_> = pack.glasses.values().cloned().collect();
        tex[1].0 = tex[0].0.clone();
        assert!(AssetPack::new(tex.clone(), gl.clone()).is_err());
        tex.pop();
        assert!(AssetPack::new(tex[2..].to_vec(), gl).is_err());
    }
}
