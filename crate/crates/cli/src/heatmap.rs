//! Portable-pixmap (binary P6) rasters of the thickness field.
//!
//! The raster covers `x ∈ [0, 1)` and `y` between the lowest and highest boundary point,
//! `WIDTH` pixels wide with square pixels. Pixel `(c, r)` samples its centre
//! `x = (c + ½)/W`, `y = y_max − (r + ½)·(y_max − y_min)/H`, `r = 0` being the top row.
//!
//! | colour              | meaning                          |
//! |---------------------|----------------------------------|
//! | green `(0,160,0)`   | film, `lo < h < hi`              |
//! | blue `(40,80,200)`  | film, `h ≤ lo`                   |
//! | red `(170,20,20)`   | film, `h ≥ hi`                   |
//! | grey `(128,128,128)`| film, `h` undefined (`div s ≤ 0`) |
//! | orange `(255,150,0)`| void                             |
//! | white               | outside `D`                      |

use std::io::Write;

use thickness_core::mesh::Region;
use thickness_core::{Mesh, ThicknessField};

pub const WIDTH: usize = 400;

pub const BAND: [u8; 3] = [0, 160, 0];
pub const BELOW: [u8; 3] = [40, 80, 200];
pub const ABOVE: [u8; 3] = [170, 20, 20];
pub const UNDEFINED: [u8; 3] = [128, 128, 128];
pub const VOID: [u8; 3] = [255, 150, 0];
pub const OUTSIDE: [u8; 3] = [255, 255, 255];

pub struct Raster {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<[u8; 3]>,
}

impl Raster {
    pub fn write_ppm<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        write!(w, "P6\n{} {}\n255\n", self.width, self.height)?;
        for p in &self.pixels {
            w.write_all(p)?;
        }
        Ok(())
    }
}

pub fn render(mesh: &Mesh<f64>, tf: &ThicknessField<f64>, band: (f64, f64)) -> Raster {
    let (y_min, y_max) = mesh
        .nodes()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &[_, y]| (lo.min(y), hi.max(y)));
    let width = WIDTH;
    let height = ((y_max - y_min) * width as f64).round().max(1.0) as usize;
    // triangle -> position in the film-only thickness arrays
    let mut film_slot = vec![usize::MAX; mesh.triangle_count()];
    for (i, &t) in tf.triangles.iter().enumerate() {
        film_slot[t] = i;
    }
    let mut pixels = Vec::with_capacity(width * height);
    for r in 0..height {
        let y = y_max - (r as f64 + 0.5) * (y_max - y_min) / height as f64;
        for c in 0..width {
            let x = (c as f64 + 0.5) / width as f64;
            let colour = match mesh.locate_point(x, y) {
                None => OUTSIDE,
                Some(t) if mesh.locate_region(t) == Region::Void => VOID,
                Some(t) => match tf.h[film_slot[t]] {
                    None => UNDEFINED,
                    Some(h) if h <= band.0 => BELOW,
                    Some(h) if h >= band.1 => ABOVE,
                    Some(_) => BAND,
                },
            };
            pixels.push(colour);
        }
    }
    Raster { width, height, pixels }
}

#[cfg(test)]
mod tests {
    use super::*;
    use thickness_core::{thickness_field, DomainSpec, Field};

    #[test]
    fn flat_film_layout() {
        let spec = DomainSpec::flat(0.0, 1.0, 0.4, 0.6).unwrap();
        let mesh = Mesh::build(&spec, 4, 20).unwrap();
        // s^y = 10 y on the film gives h = 2 / (0.1 · 10) = 2 with a = 1e-2
        let sy = Field::interpolate(&mesh, None, |_, y| 10.0 * y).unwrap();
        let sx = Field::zeros(&mesh, None);
        let tf = thickness_field(&sx, &sy, 1e-2, 0.2).unwrap();
        let raster = render(&mesh, &tf, (1.0, 3.0));
        assert_eq!((raster.width, raster.height), (WIDTH, WIDTH));
        let px = |r: usize| raster.pixels[r * WIDTH + 7];
        assert_eq!(px(0), VOID);
        assert_eq!(px(WIDTH / 2), BAND);
        assert_eq!(px(WIDTH - 1), VOID);
        let above = render(&mesh, &tf, (0.5, 1.5));
        assert_eq!(above.pixels[WIDTH / 2 * WIDTH], ABOVE);

        let mut buf = Vec::new();
        raster.write_ppm(&mut buf).unwrap();
        let header = format!("P6\n{WIDTH} {WIDTH}\n255\n");
        assert!(buf.starts_with(header.as_bytes()));
        assert_eq!(buf.len(), header.len() + 3 * WIDTH * WIDTH);
    }

    #[test]
    fn wavy_top_is_outside() {
        let spec = DomainSpec::wavy_film(1.0).unwrap();
        let mesh = Mesh::build(&spec, 16, 60).unwrap();
        let sx = Field::zeros(&mesh, None);
        let sy = Field::zeros(&mesh, None);
        let tf = thickness_field(&sx, &sy, 1e-2, 0.49).unwrap();
        let raster = render(&mesh, &tf, (0.3, 0.7));
        // top row centre: y ≈ 3 > b_r(0.5) = 2
        assert_eq!(raster.pixels[WIDTH / 2], OUTSIDE);
        assert_eq!(raster.pixels[0], VOID);
        let film_row = (raster.height as f64 * (1.0 - 0.75 / 3.0)) as usize;
        assert_eq!(raster.pixels[film_row * WIDTH + 10], UNDEFINED);
    }
}
