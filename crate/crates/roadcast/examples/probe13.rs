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
    for lr in [2e-3f64, 1e-3] {
        for kind in [ModelKind::ALstm, ModelKind::Lstm] {
            for split in [0usize, 1, 2] {
                let (tr, va, te) = ds.split_sets(split).unwrap();
                let mut tc = TrainConfig::new(kind, ModelDims::for_encoding(EncodingMode::Cyclic));
                tc.epochs = 100;
                tc.lr = lr;
                let (params, hist) = train(&tr, &va, &tc).unwrap();
                println!("lr {lr} {kind:?} split {}: e100 {:.3} test {:.3} persist {:.3}",
                    split + 1,
                    hist.epochs[99].train_mse * 1000.0,
                    evaluate(&params, &te).unwrap(),
                    persistence_baseline(&te).unwrap());
            }
        }
    }
}
