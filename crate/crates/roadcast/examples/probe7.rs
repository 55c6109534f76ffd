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
    // how many exo features to blank: 0 (none), 6 (month+day+season sin/cos)
    for blank in [0usize, 6] {
        let (mut tr, mut va, mut te) = ds.split_sets(2).unwrap();
        for set in [&mut tr, &mut va, &mut te] {
            for w in set.iter_mut() {
                for i in 0..blank {
                    w.exo.as_mut_slice()[i] = 0.0;
                }
            }
        }
        let mut tc = TrainConfig::new(ModelKind::Lstm, ModelDims::for_encoding(EncodingMode::Cyclic));
        tc.epochs = 100;
        let (params, hist) = train(&tr, &va, &tc).unwrap();
        println!("blank {blank}: e100 {:.3} | test {:.3} persist {:.3}",
            hist.epochs[99].train_mse * 1000.0,
            evaluate(&params, &te).unwrap(),
            persistence_baseline(&te).unwrap());
    }
}
