//! Weather boundary conditions: one day of driving data per simulation day.

use super::BuildingError;
use std::fs;
use std::path::Path;

/// A single day of weather, sampled once per simulation interval.
///
/// All four series have the same length (the number of intervals per day)
/// and are zero-order-hold samples taken at the start of each interval.
#[derive(Debug, Clone, PartialEq)]
pub struct WeatherDay {
    pub label: String,
    /// Outdoor dry-bulb temperature in degrees Celsius.
    pub dry_bulb: Vec<f64>,
    /// Relative humidity in percent.
    pub relative_humidity: Vec<f64>,
    /// Wind speed in metres per second.
    pub wind_speed: Vec<f64>,
    /// Direct solar irradiance in watts per square metre.
    pub direct_solar: Vec<f64>,
}

/// One interval's worth of weather, handed to the zone model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeatherSample {
    pub dry_bulb: f64,
    pub relative_humidity: f64,
    pub wind_speed: f64,
    pub direct_solar: f64,
}

impl WeatherDay {
    pub fn validate(&self) -> Result<(), BuildingError> {
        let n = self.dry_bulb.len();
        if n == 0 {
            return Err(BuildingError::BadWeather("no samples".into()));
        }
        if self.relative_humidity.len() != n
            || self.wind_speed.len() != n
            || self.direct_solar.len() != n
        {
            return Err(BuildingError::BadWeather(format!(
                "series lengths differ: dry_bulb {}, rh {}, wind {}, solar {}",
                n,
                self.relative_humidity.len(),
                self.wind_speed.len(),
                self.direct_solar.len()
            )));
        }
        for (i, rh) in self.relative_humidity.iter().enumerate() {
            if !(0.0..=100.0).contains(rh) {
                return Err(BuildingError::BadWeather(format!(
                    "relative humidity out of [0, 100] at sample {i}: {rh}"
                )));
            }
        }
        for (i, s) in self.direct_solar.iter().enumerate() {
            if *s < 0.0 || !s.is_finite() {
                return Err(BuildingError::BadWeather(format!(
                    "negative or non-finite solar at sample {i}: {s}"
                )));
            }
        }
        Ok(())
    }

    pub fn samples_per_day(&self) -> usize {
        self.dry_bulb.len()
    }

    /// Sample for the interval containing `seconds` (seconds since the start
    /// of the day). Times beyond the day wrap periodically.
    pub fn sample_at(&self, seconds: f64) -> WeatherSample {
        let n = self.dry_bulb.len();
        let dt = 86_400.0 / n as f64;
        let idx = (seconds.rem_euclid(86_400.0) / dt).floor() as usize % n;
        WeatherSample {
            dry_bulb: self.dry_bulb[idx],
            relative_humidity: self.relative_humidity[idx],
            wind_speed: self.wind_speed[idx],
            direct_solar: self.direct_solar[idx],
        }
    }
}

/// Generates a smooth synthetic hot day.
///
/// The dry-bulb profile is a piecewise half-cosine: the minimum temperature
/// occurs ten hours before `peak_hour` and the maximum exactly at
/// `peak_hour`, so a profile built with `peak_hour = 16.0` hits `min_temp`
/// at 06:00 and `peak_temp` at 16:00 on the interval grid. Humidity moves in
/// anti-phase with temperature, wind follows a gentle diurnal swing and
/// solar irradiance is a half-sine over the daylight window.
pub fn synthetic_weather(
    peak_temp: f64,
    min_temp: f64,
    peak_hour: f64,
    steps_per_day: usize,
) -> WeatherDay {
    assert!(steps_per_day > 0, "steps_per_day must be positive");
    assert!(peak_temp >= min_temp, "peak_temp must be >= min_temp");
    let range = peak_temp - min_temp;
    let min_hour = (peak_hour - 10.0).rem_euclid(24.0);
    let rise_span = (peak_hour - min_hour).rem_euclid(24.0);
    let fall_span = 24.0 - rise_span;

    let mut dry_bulb = Vec::with_capacity(steps_per_day);
    let mut relative_humidity = Vec::with_capacity(steps_per_day);
    let mut wind_speed = Vec::with_capacity(steps_per_day);
    let mut direct_solar = Vec::with_capacity(steps_per_day);

    for k in 0..steps_per_day {
        let h = k as f64 * 24.0 / steps_per_day as f64;
        let since_min = (h - min_hour).rem_euclid(24.0);
        // Written as min + range * fraction so the anchor samples reproduce
        // `min_temp` and `peak_temp` exactly (fraction is exactly 0 or 1
        // there; `mid +/- amp` would pick up rounding error instead).
        let temp = if since_min <= rise_span {
            // Warming branch: half-cosine from the minimum up to the peak.
            min_temp
                + range * 0.5 * (1.0 - (std::f64::consts::PI * since_min / rise_span).cos())
        } else {
            let since_peak = since_min - rise_span;
            min_temp
                + range * 0.5 * (1.0 + (std::f64::consts::PI * since_peak / fall_span).cos())
        };
        let rh = if range > 0.0 {
            let mid = min_temp + 0.5 * range;
            (55.0 - 50.0 * (temp - mid) / range).clamp(20.0, 95.0)
        } else {
            55.0
        };
        let wind = 2.5 + 1.5 * (2.0 * std::f64::consts::PI * (h - 10.0) / 24.0).sin();
        let solar = if (5.5..=19.5).contains(&h) {
            850.0 * (std::f64::consts::PI * (h - 5.5) / 14.0).sin()
        } else {
            0.0
        };
        dry_bulb.push(temp);
        relative_humidity.push(rh);
        wind_speed.push(wind);
        direct_solar.push(solar.max(0.0));
    }

    WeatherDay {
        label: "synthetic".to_string(),
        dry_bulb,
        relative_humidity,
        wind_speed,
        direct_solar,
    }
}

/// Loads a weather day from a CSV file with columns
/// `dry_bulb,relative_humidity,wind_speed,direct_solar` and an optional
/// header row. The file must contain one row per simulation interval.
pub fn load_weather_csv(path: &Path) -> Result<WeatherDay, BuildingError> {
    let text = fs::read_to_string(path)
        .map_err(|e| BuildingError::WeatherCsv(format!("{}: {e}", path.display())))?;
    let label = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "weather".to_string());
    let mut day = WeatherDay {
        label,
        dry_bulb: Vec::new(),
        relative_humidity: Vec::new(),
        wind_speed: Vec::new(),
        direct_solar: Vec::new(),
    };
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if lineno == 0 && fields.iter().any(|f| f.parse::<f64>().is_err()) {
            continue; // header row
        }
        if fields.len() != 4 {
            return Err(BuildingError::WeatherCsv(format!(
                "line {}: expected 4 fields, found {}",
                lineno + 1,
                fields.len()
            )));
        }
        let mut values = [0.0; 4];
        for (slot, field) in values.iter_mut().zip(&fields) {
            *slot = field.parse::<f64>().map_err(|e| {
                BuildingError::WeatherCsv(format!("line {}: {e}: {field:?}", lineno + 1))
            })?;
        }
        day.dry_bulb.push(values[0]);
        day.relative_humidity.push(values[1]);
        day.wind_speed.push(values[2]);
        day.direct_solar.push(values[3]);
    }
    day.validate()?;
    Ok(day)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// The test day from the case study: 37.2 C peak at 16:00, 28.6 C
    /// minimum at 06:00, on a 96-interval grid. These two anchors must be
    /// reproduced exactly.
    #[test]
    fn synthetic_day_hits_anchors_exactly() {
        let day = synthetic_weather(37.2, 28.6, 16.0, 96);
        assert_eq!(day.samples_per_day(), 96);
        assert_eq!(day.dry_bulb[64], 37.2); // 16:00
        assert_eq!(day.dry_bulb[24], 28.6); // 06:00
        let max = day.dry_bulb.iter().cloned().fold(f64::MIN, f64::max);
        let min = day.dry_bulb.iter().cloned().fold(f64::MAX, f64::min);
        assert_eq!(max, 37.2);
        assert_eq!(min, 28.6);
    }

    #[test]
    fn synthetic_day_is_continuous_and_valid() {
        let day = synthetic_weather(37.2, 28.6, 16.0, 96);
        day.validate().unwrap();
        // No step-to-step jump larger than 1 C on a smooth diurnal profile.
        for w in day.dry_bulb.windows(2) {
            assert!((w[1] - w[0]).abs() < 1.0, "jump {} -> {}", w[0], w[1]);
        }
        // Wraparound from 23:45 back to 00:00 is smooth too.
        let n = day.dry_bulb.len();
        assert!((day.dry_bulb[n - 1] - day.dry_bulb[0]).abs() < 1.0);
    }

    #[test]
    fn solar_zero_at_night_positive_at_noon() {
        let day = synthetic_weather(35.0, 27.0, 16.0, 96);
        assert_eq!(day.direct_solar[0], 0.0); // midnight
        assert_eq!(day.direct_solar[20], 0.0); // 05:00
        assert!(day.direct_solar[50] > 700.0); // 12:30
        assert_eq!(day.direct_solar[82], 0.0); // 20:30
    }

    #[test]
    fn humidity_moves_against_temperature() {
        let day = synthetic_weather(37.2, 28.6, 16.0, 96);
        // RH at the temperature peak must be lower than at the minimum.
        assert!(day.relative_humidity[64] < day.relative_humidity[24]);
        day.validate().unwrap();
    }

    #[test]
    fn sample_at_wraps_and_holds() {
        let day = synthetic_weather(37.2, 28.6, 16.0, 96);
        let s = day.sample_at(16.0 * 3600.0);
        assert_eq!(s.dry_bulb, 37.2);
        // Mid-interval time falls back to the interval-start sample.
        let s2 = day.sample_at(16.0 * 3600.0 + 450.0);
        assert_eq!(s2.dry_bulb, 37.2);
        // One full day later wraps around.
        let s3 = day.sample_at(86_400.0 + 16.0 * 3600.0);
        assert_eq!(s3.dry_bulb, 37.2);
    }

    #[test]
    fn csv_round_trip() {
        let day = synthetic_weather(37.2, 28.6, 16.0, 8);
        let mut text = String::from("dry_bulb,relative_humidity,wind_speed,direct_solar\n");
        for i in 0..8 {
            text.push_str(&format!(
                "{},{},{},{}\n",
                day.dry_bulb[i], day.relative_humidity[i], day.wind_speed[i], day.direct_solar[i]
            ));
        }
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("day.csv");
        std::fs::write(&path, text).unwrap();
        let loaded = load_weather_csv(&path).unwrap();
        assert_eq!(loaded.dry_bulb, day.dry_bulb);
        assert_eq!(loaded.relative_humidity, day.relative_humidity);
        assert_eq!(loaded.label, "day");
    }

    #[test]
    fn csv_rejects_bad_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "1,2,3\n").unwrap();
        assert!(load_weather_csv(&path).is_err());
        std::fs::write(&path, "30,50,2,oops\n").unwrap();
        assert!(load_weather_csv(&path).is_err());
        // RH out of range fails validation.
        std::fs::write(&path, "30,150,2,0\n").unwrap();
        assert!(load_weather_csv(&path).is_err());
    }
}
