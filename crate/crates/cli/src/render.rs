//! Minimal SVG writer in unit-square coordinates with the y-axis pointing up.

use std::fmt::Write as _;

use carpet_quant::Rect;

pub struct Svg {
    body: String,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace("--", "- -")
}

impl Svg {
    pub fn new(header: &[String]) -> Self {
        let mut body = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
        for h in header {
            let _ = writeln!(body, "<!-- {} -->", escape(h));
        }
        body.push_str(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" viewBox=\"0 0 1 1\" width=\"800\" height=\"800\">\n\
             <rect x=\"0\" y=\"0\" width=\"1\" height=\"1\" fill=\"white\" stroke=\"#888\" stroke-width=\"0.002\"/>\n\
             <g transform=\"matrix(1 0 0 -1 0 1)\">\n",
        );
        Svg { body }
    }

    /// Draws `r` as given; the group transform maps `y` to `1 − y`.
    pub fn rect(&mut self, r: &Rect<f64>, title: &str) {
        let _ = writeln!(
            self.body,
            "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"#3a6ea5\" fill-opacity=\"0.35\" stroke=\"#1d3557\" stroke-width=\"0.0015\"><title>{}</title></rect>",
            r.x_lo,
            r.y_lo,
            r.x_hi - r.x_lo,
            r.y_hi - r.y_lo,
            escape(title)
        );
    }

    pub fn dot(&mut self, p: &[f64; 2], radius: f64, color: &str) {
        let _ = writeln!(self.body, "<circle cx=\"{}\" cy=\"{}\" r=\"{radius}\" fill=\"{color}\"/>", p[0], p[1]);
    }

    pub fn finish(mut self) -> String {
        self.body.push_str("</g>\n</svg>\n");
        self.body
    }
}
