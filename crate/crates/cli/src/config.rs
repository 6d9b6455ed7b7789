use anyhow::{Context, Result};
use icg_bpoint::{DetectorConfig, EpsilonBand, RampGeometry};

use crate::args::{ConfigArgs, Ramp};
use crate::Failure;

pub fn resolve(args: &ConfigArgs) -> Result<DetectorConfig, Failure> {
    let mut cfg = match &args.config {
        Some(path) => load(path).map_err(Failure::usage)?,
        None => DetectorConfig::default(),
    };
    let set = |slot: &mut f64, v: Option<f64>| {
        if let Some(v) = v {
            *slot = v;
        }
    };
    set(&mut cfg.pre_c_window_ms, args.pre_c_window_ms);
    set(&mut cfg.c_min_distance_ms, args.c_min_distance_ms);
    set(
        &mut cfg.c_threshold_std_fraction,
        args.c_threshold_std_fraction,
    );
    set(&mut cfg.alpha, args.alpha);
    set(
        &mut cfg.mb_min_peak_distance_ms,
        args.mb_min_peak_distance_ms,
    );
    set(&mut cfg.mb_threshold_divisor, args.mb_threshold_divisor);
    set(&mut cfg.filter.f_low, args.f_low);
    set(&mut cfg.filter.f_high, args.f_high);
    if let Some(order) = args.filter_order {
        cfg.filter.order = order;
    }
    if let Some(fraction) = args.epsilon_fraction {
        cfg.epsilon = EpsilonBand::Relative { fraction };
    }
    if let Some(value) = args.epsilon_absolute {
        cfg.epsilon = EpsilonBand::Absolute { value };
    }
    if let Some(ramp) = args.ramp {
        cfg.ramp = match ramp {
            Ramp::StartToMinimum => RampGeometry::StartToMinimum,
            Ramp::MinimumToMaximum => RampGeometry::MinimumToMaximum,
        };
    }
    cfg.validate().map_err(|e| Failure::usage(e.into()))?;
    Ok(cfg)
}

fn load(path: &std::path::Path) -> Result<DetectorConfig> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}
