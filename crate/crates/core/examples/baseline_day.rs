//! Runs each office archetype through one hot day under the fixed baseline
//! control (supply air at 15 C, all setpoints at 25 C) and prints an hourly
//! power and temperature profile. Useful for eyeballing the building physics.

use flexcluster::buildings::{
    synthetic_weather, MediumOffice, MediumOfficeParams, SmallOffice, SmallOfficeParams,
};
use flexcluster::unit::CoSimUnit;

fn main() {
    let day = synthetic_weather(37.2, 28.6, 16.0, 96);

    let mut small = SmallOffice::new(SmallOfficeParams::variant_a(), day.clone()).unwrap();
    let mut medium = MediumOffice::new(MediumOfficeParams::variant_a(), day.clone()).unwrap();

    println!("hour  t_out  | small: kW  t_zones(min..max)      | medium: kW  t_floors");
    let mut small_peak: f64 = 0.0;
    let mut medium_peak: f64 = 0.0;
    for k in 0..96 {
        small.do_step(900.0).unwrap();
        medium.do_step(900.0).unwrap();
        let s = small.get_outputs();
        let m = medium.get_outputs();
        let s_kw = (s[4] + s[5]) / 1e3;
        let m_kw = (m[4] + m[5] + m[6] + m[7] + m[8] + m[9]) / 1e3;
        small_peak = small_peak.max(s_kw);
        medium_peak = medium_peak.max(m_kw);
        if k % 4 == 3 {
            let zmin = s[8..13].iter().cloned().fold(f64::MAX, f64::min);
            let zmax = s[8..13].iter().cloned().fold(f64::MIN, f64::max);
            println!(
                "{:>5.2}  {:>5.2}  | {:>9.2}  {:>5.2}..{:<5.2}          | {:>9.2}  {:>5.2} {:>5.2} {:>5.2}",
                (k + 1) as f64 / 4.0,
                s[0],
                s_kw,
                zmin,
                zmax,
                m_kw,
                m[16],
                m[17],
                m[18]
            );
        }
    }
    println!("small office peak: {small_peak:.2} kW");
    println!("medium office peak: {medium_peak:.2} kW");
    println!(
        "cluster (2 small + 2 medium) coincident peak upper bound: {:.2} kW",
        2.0 * small_peak + 2.0 * medium_peak
    );
}
