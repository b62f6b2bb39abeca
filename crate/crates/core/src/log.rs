//! Per-cycle signal table.

use alloc::string::String;
use alloc::vec::Vec;

/// Column names, in file order. Suffixes `_0`/`_1` are the tendon index.
pub const COLUMNS: [&str; 34] = [
    "t",
    "i_cmd_0",
    "i_cmd_1",
    "i_obs_star_0",
    "i_obs_star_1",
    "i_obs_dstar_0",
    "i_obs_dstar_1",
    "i_obs_dstar_filt_0",
    "i_obs_dstar_filt_1",
    "u_ff_0",
    "u_ff_1",
    "u_fb_0",
    "u_fb_1",
    "f_cmd_0",
    "f_cmd_1",
    "f_obs_0",
    "f_obs_1",
    "dl_0",
    "dl_1",
    "dl_dot_0",
    "dl_dot_1",
    "theta_out_0",
    "theta_out_1",
    "tip_x",
    "tip_y",
    "contact",
    "setpoint_0",
    "setpoint_1",
    "i_obs_star_raw_0",
    "i_obs_star_raw_1",
    "e_0",
    "e_1",
    "integral_0",
    "integral_1",
];

/// Version tag of the column layout above.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LogRow {
    pub t: f64,
    pub i_cmd: [f64; 2],
    pub i_obs_star: [f64; 2],
    pub i_obs_dstar: [f64; 2],
    pub i_obs_dstar_filt: [f64; 2],
    pub u_ff: [f64; 2],
    pub u_fb: [f64; 2],
    pub f_cmd: [f64; 2],
    pub f_obs: [f64; 2],
    pub dl: [f64; 2],
    pub dl_dot: [f64; 2],
    pub theta_out: [f64; 2],
    pub tip: [f64; 2],
    pub contact: bool,
    pub setpoint: [f64; 2],
    pub i_obs_star_raw: [f64; 2],
    pub e: [f64; 2],
    pub integral: [f64; 2],
}

impl LogRow {
    pub fn values(&self) -> [f64; 34] {
        let [a0, a1] = self.i_cmd;
        let [b0, b1] = self.i_obs_star;
        let [c0, c1] = self.i_obs_dstar;
        let [d0, d1] = self.i_obs_dstar_filt;
        let [e0, e1] = self.u_ff;
        let [f0, f1] = self.u_fb;
        let [g0, g1] = self.f_cmd;
        let [h0, h1] = self.f_obs;
        let [j0, j1] = self.dl;
        let [k0, k1] = self.dl_dot;
        let [l0, l1] = self.theta_out;
        let [x, y] = self.tip;
        let [s0, s1] = self.setpoint;
        let [r0, r1] = self.i_obs_star_raw;
        let [n0, n1] = self.e;
        let [m0, m1] = self.integral;
        let c = if self.contact { 1.0 } else { 0.0 };
        [
            self.t, a0, a1, b0, b1, c0, c1, d0, d1, e0, e1, f0, f1, g0, g1, h0, h1, j0, j1, k0, k1, l0,
            l1, x, y, c, s0, s1, r0, r1, n0, n1, m0, m1,
        ]
    }

    pub fn from_values(v: &[f64; 34]) -> Self {
        let two = |i: usize| [v[i], v[i + 1]];
        Self {
            t: v[0],
            i_cmd: two(1),
            i_obs_star: two(3),
            i_obs_dstar: two(5),
            i_obs_dstar_filt: two(7),
            u_ff: two(9),
            u_fb: two(11),
            f_cmd: two(13),
            f_obs: two(15),
            dl: two(17),
            dl_dot: two(19),
            theta_out: two(21),
            tip: two(23),
            contact: v[25] != 0.0,
            setpoint: two(26),
            i_obs_star_raw: two(28),
            e: two(30),
            integral: two(32),
        }
    }
}

/// Uniformly sampled run record plus the resolved configuration it came from.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TimeSeriesLog {
    pub dt: f64,
    /// Resolved `(key, value)` pairs echoed into the file header.
    pub header: Vec<(String, String)>,
    pub rows: Vec<LogRow>,
}

impl TimeSeriesLog {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// One column by name.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = COLUMNS.iter().position(|c| *c == name)?;
        Some(self.rows.iter().map(|r| r.values()[idx]).collect())
    }

    pub fn times(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.t).collect()
    }

    pub fn series(&self, f: impl Fn(&LogRow) -> f64) -> Vec<f64> {
        self.rows.iter().map(f).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values_round_trip() {
        let mut v = [0.0; 34];
        for (i, x) in v.iter_mut().enumerate() {
            *x = i as f64 * 0.5;
        }
        v[25] = 1.0;
        assert_eq!(LogRow::from_values(&v).values(), v);
    }

    #[test]
    fn column_lookup() {
        let log = TimeSeriesLog {
            dt: 0.1,
            header: Vec::new(),
            rows: (0..3).map(|k| LogRow { t: k as f64 * 0.1, f_obs: [k as f64, 0.0], ..Default::default() }).collect(),
        };
        assert_eq!(log.column("f_obs_0").unwrap(), [0.0, 1.0, 2.0]);
        assert!(log.column("nope").is_none());
        let unique: alloc::collections::BTreeSet<_> = COLUMNS.iter().collect();
        assert_eq!(unique.len(), COLUMNS.len());
    }
}
