//! Ready-made parametrizations of `[0, 1)` and `[0, 1)^2`.
//!
//! Plane loops run clockwise in the chart, `c + r (cos 2 pi t, -sin 2 pi t)`.

use std::f64::consts::TAU;
use std::sync::Arc;

use nalgebra::DVector;

use super::Parametrization;
use crate::ambient::{moser, AmbientModel, Point};

fn point(v: &[f64]) -> Point {
    DVector::from_row_slice(v)
}

/// Circle of radius `r` about `(cx, cy)`, traversed `turns` times.
pub fn circle(cx: f64, cy: f64, r: f64, turns: u32) -> Parametrization {
    Arc::new(move |u: &[f64]| {
        let a = TAU * turns as f64 * u[0];
        point(&[cx + r * a.cos(), cy - r * a.sin()])
    })
}

/// Ellipse with semi-axes `a`, `b` about the origin.
pub fn ellipse(a: f64, b: f64) -> Parametrization {
    Arc::new(move |u: &[f64]| {
        let t = TAU * u[0];
        point(&[a * t.cos(), -b * t.sin()])
    })
}

/// Circle with a radial wobble `r (1 + amp cos(k t))`.
pub fn wobbly_circle(r: f64, amp: f64, k: u32) -> Parametrization {
    Arc::new(move |u: &[f64]| {
        let t = TAU * u[0];
        let rho = r * (1.0 + amp * (k as f64 * t).cos());
        point(&[rho * t.cos(), -rho * t.sin()])
    })
}

/// Sphere loop `theta(phi)` in the stereographic chart centred at the `theta = 0` pole.
pub fn sphere_curve(theta: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Parametrization {
    Arc::new(move |u: &[f64]| {
        let phi = TAU * u[0];
        let rho = (0.5 * theta(phi)).tan();
        point(&[rho * phi.cos(), -rho * phi.sin()])
    })
}

/// Latitude circle at polar angle `theta0`.
pub fn latitude(theta0: f64) -> Parametrization {
    sphere_curve(move |_| theta0)
}

/// Equator displaced by `amp cos(k phi)` in polar angle.
pub fn perturbed_equator(amp: f64, k: u32) -> Parametrization {
    sphere_curve(move |phi| 0.5 * std::f64::consts::PI + amp * (k as f64 * phi).cos())
}

/// Closed straight line `offset + t (p v_1 + q v_2)` on a flat torus with lattice columns `v_1, v_2`.
pub fn straight_line(model: &AmbientModel, offset: [f64; 2], p: i32, q: i32) -> Parametrization {
    wiggly_line(model, offset, p, q, 0.0, 1)
}

/// Straight line plus a normal displacement `amp sin(2 pi k t)`.
pub fn wiggly_line(model: &AmbientModel, offset: [f64; 2], p: i32, q: i32, amp: f64, k: u32) -> Parametrization {
    let lattice = model.lattice().expect("lines close up only on a torus").clone();
    let dir = lattice.column(0) * p as f64 + lattice.column(1) * q as f64;
    let normal = [-dir[1] / dir.norm(), dir[0] / dir.norm()];
    Arc::new(move |u: &[f64]| {
        let w = amp * (TAU * k as f64 * u[0]).sin();
        point(&[offset[0] + u[0] * dir[0] + w * normal[0], offset[1] + u[0] * dir[1] + w * normal[1]])
    })
}

/// `gamma_1(s) x gamma_2(t)` for two plane loops, coordinates `(x1, y1, x2, y2)`.
pub fn product_of_curves(first: Parametrization, second: Parametrization) -> Parametrization {
    Arc::new(move |u: &[f64]| {
        let a = first(&[u[0]]);
        let b = second(&[u[1]]);
        point(&[a[0], a[1], b[0], b[1]])
    })
}

/// Product of circles of radii `r1`, `r2` about the origin.
pub fn product_torus(r1: f64, r2: f64) -> Parametrization {
    product_of_curves(circle(0.0, 0.0, r1, 1), circle(0.0, 0.0, r2, 1))
}

/// `(e^{-i s}, e^{-i (t + delta sin s)})`, Lagrangian for every `delta`.
pub fn graph_torus(delta: f64) -> Parametrization {
    Arc::new(move |u: &[f64]| {
        let s = TAU * u[0];
        let t = TAU * u[1] + delta * s.sin();
        point(&[s.cos(), -s.sin(), t.cos(), -t.sin()])
    })
}

/// `(e^{-i s}, e^{-i t} + delta e^{-i s})`; `|omega(t_s, t_t)|` reaches about `delta`.
pub fn sheared_torus(delta: f64) -> Parametrization {
    Arc::new(move |u: &[f64]| {
        let s = TAU * u[0];
        let t = TAU * u[1];
        point(&[s.cos(), -s.sin(), t.cos() + delta * s.cos(), -t.sin() - delta * s.sin()])
    })
}

/// Real torus `{y = y0}` spanned by lattice columns 0 and 2 of a flat 2-torus.
pub fn real_torus(model: &AmbientModel, y0: [f64; 2]) -> Parametrization {
    let lattice = model.lattice().expect("real torus needs a lattice").clone();
    let (v1, v2) = (lattice.column(0).into_owned(), lattice.column(2).into_owned());
    Arc::new(move |u: &[f64]| {
        let mut p = &v1 * u[0] + &v2 * u[1];
        p[1] += y0[0];
        p[3] += y0[1];
        p
    })
}

/// Image of a flat Lagrangian under the Moser map of a potential-perturbed model.
pub fn moser_image(model: &AmbientModel, flat: Parametrization, steps: usize) -> Parametrization {
    let model = model.clone();
    Arc::new(move |u: &[f64]| moser::moser_map(&model, &flat(u), steps).expect("Moser flow on a validated model"))
}
