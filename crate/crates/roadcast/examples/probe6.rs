use chrono::{Datelike, Duration, Weekday};
use roadcast::dataio::{generate_synthetic, aggregate, SynthConfig};
use roadcast::dataset::prepare_dataset;
use roadcast::features::{EncodingMode, HolidayCalendar, HolidayClass};
use roadcast::evaluation::evaluate;
use roadcast::network::{ModelDims, ModelKind};
use roadcast::optimizer::{train, TrainConfig};
use std::time::Instant;

// Weekend Thu/Fri + calendar holiday every Saturday -> weekly planted pattern.
fn weekly_holidays(start: chrono::NaiveDate, days: u32) -> HolidayCalendar {
    let mut cal = HolidayCalendar::new();
    for k in 0..days {
        let date = start + Duration::days(k as i64);
        match date.weekday() {
            Weekday::Thu | Weekday::Fri => cal.insert(date, HolidayClass::Weekend),
            Weekday::Sat => cal.insert(date, HolidayClass::Calendar),
            _ => {}
        }
    }
    cal
}

fn run(days: u32, factor: Option<u32>, seed: u64, kind: ModelKind, epochs: usize) -> f64 {
    let cfg = SynthConfig { days, seed, ..SynthConfig::default() };
    let cal = weekly_holidays(cfg.start_date, cfg.days);
    let s = generate_synthetic(&cfg, &cal, seed).unwrap();
    let s = match factor { None => s, Some(f) => aggregate(&s, f).unwrap() };
    let ds = prepare_dataset(&s, &cal, EncodingMode::Cyclic, 3).unwrap();
    let mut sum = 0.0;
    for split in 0..3 {
        let (tr, va, te) = ds.split_sets(split).unwrap();
        let mut tc = TrainConfig::new(kind, ModelDims::for_encoding(EncodingMode::Cyclic));
        tc.epochs = epochs;
        tc.seed = seed;
        let (params, _) = train(&tr, &va, &tc).unwrap();
        sum += evaluate(&params, &te).unwrap();
    }
    sum / 3.0
}

fn main() {
    let t0 = Instant::now();
    for (label, factor) in [("5min", None), ("15min", Some(3)), ("30min", Some(6))] {
        let mut a = vec![];
        let mut l = vec![];
        for seed in 1..=5u64 {
            let av = run(28, factor, seed, ModelKind::ALstm, 30);
            let lv = run(28, factor, seed, ModelKind::Lstm, 30);
            println!("{label} seed {seed}: alstm {av:.4} lstm {lv:.4}  [{:?}]", t0.elapsed());
            a.push(av);
            l.push(lv);
        }
        a.sort_by(|x, y| x.partial_cmp(y).unwrap());
        l.sort_by(|x, y| x.partial_cmp(y).unwrap());
        println!("== {label}: median alstm {:.4} vs lstm {:.4}", a[2], l[2]);
    }
}
