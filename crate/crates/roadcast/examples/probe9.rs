use roadcast::dataio::{default_holidays, generate_synthetic, aggregate, SynthConfig};
use roadcast::dataset::prepare_dataset;
use roadcast::features::EncodingMode;
use roadcast::evaluation::{evaluate, persistence_baseline};
use roadcast::network::{ModelDims, ModelKind};
use roadcast::optimizer::{train, TrainConfig};

fn main() {
    let cfg = SynthConfig { days: 180, ..SynthConfig::default() };
    let cal = default_holidays(cfg.start_date, cfg.days);
    let s15 = aggregate(&generate_synthetic(&cfg, &cal, 1).unwrap(), 3).unwrap();
    let ds = prepare_dataset(&s15, &cal, EncodingMode::Cyclic, 3).unwrap();

    // Which feature block carries the damage? Blank subsets of exo indices.
    let subsets: [(&str, &[usize]); 5] = [
        ("none", &[]),
        ("month", &[0, 1]),
        ("season", &[4, 5]),
        ("month+season", &[0, 1, 4, 5]),
        ("month+day+season", &[0, 1, 2, 3, 4, 5]),
    ];
    for (label, idxs) in subsets {
        let (mut tr, mut va, mut te) = ds.split_sets(2).unwrap();
        for set in [&mut tr, &mut va, &mut te] {
            for w in set.iter_mut() {
                for &i in idxs { w.exo.as_mut_slice()[i] = 0.0; }
            }
        }
        let mut tc = TrainConfig::new(ModelKind::Lstm, ModelDims::for_encoding(EncodingMode::Cyclic));
        tc.epochs = 100;
        let (params, _) = train(&tr, &va, &tc).unwrap();
        println!("blank {label}: test {:.3} persist {:.3}",
            evaluate(&params, &te).unwrap(), persistence_baseline(&te).unwrap());
    }

    // Does the damage grow with training (Adam walk) or sit at init?
    let (tr, _va, te) = ds.split_sets(2).unwrap();
    for epochs in [1usize, 5, 20, 50, 100] {
        let mut tc = TrainConfig::new(ModelKind::Lstm, ModelDims::for_encoding(EncodingMode::Cyclic));
        tc.epochs = epochs;
        let (params, _) = train(&tr, &[], &tc).unwrap();
        println!("epochs {epochs}: test {:.3}", evaluate(&params, &te).unwrap());
    }

    // One-hot encoding: unseen categories never receive gradient.
    let ds_oh = prepare_dataset(&s15, &cal, EncodingMode::OneHot, 3).unwrap();
    let (tr, va, te) = ds_oh.split_sets(2).unwrap();
    let mut tc = TrainConfig::new(ModelKind::Lstm, ModelDims::for_encoding(EncodingMode::OneHot));
    tc.epochs = 100;
    let (params, _) = train(&tr, &va, &tc).unwrap();
    println!("onehot: test {:.3} persist {:.3}", evaluate(&params, &te).unwrap(), persistence_baseline(&te).unwrap());
}
