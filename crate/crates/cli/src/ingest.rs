//! `lenp ingest`: raw posts to encoded, split datasets.

use lenp::data::{
    append_noise_columns, read_jsonl, split, synthetic, write_jsonl, Dataset, DatasetFile, Fractions, NoiseMode,
    NoiseSpec,
};
use serde::Serialize;

use crate::config::{self, RunConfig};
use crate::output::{self, ensure_dir, write_json};
use crate::{CliError, CliResult, Command, IngestArgs, TaskArg};

#[derive(Serialize)]
struct NoiseRecord<'a> {
    spec: &'a NoiseSpec,
    feature_ids: &'a [usize],
    terms: Vec<&'a str>,
}

#[derive(Serialize)]
struct Summary {
    n_docs: usize,
    n_features: usize,
    classes: Vec<String>,
    train: usize,
    val: usize,
    test: usize,
}

pub fn run(a: &IngestArgs, mut cfg: RunConfig, cmd: &Command) -> CliResult<()> {
    let setup = &mut cfg.corpus;
    if let Some(v) = a.max_features {
        setup.max_features = v;
    }
    if let Some(v) = a.min_df {
        setup.min_doc_freq = v;
    }
    if let Some(f) = &a.fractions {
        setup.fractions = Fractions::new(f[0], f[1], f[2])?;
    }
    if let Some(n) = a.synthetic {
        setup.corpus.n_docs = n;
    }

    ensure_dir(&a.out)?;
    let ds = match (&a.input, a.task) {
        (Some(path), _) => {
            if !path.is_file() {
                return Err(CliError::usage(format!("{} does not exist", path.display())));
            }
            let docs = read_jsonl(path)?;
            Dataset::from_documents(&docs, setup.max_features, setup.min_doc_freq, a.classes.clone())?
        }
        (None, TaskArg::Tags) => {
            let docs = synthetic::tag_corpus(&setup.corpus, setup.corpus_seed);
            write_jsonl(a.out.join("corpus.jsonl"), &docs)?;
            let classes = a.classes.clone().unwrap_or_else(|| setup.corpus.tag_names());
            Dataset::from_documents(&docs, setup.max_features, setup.min_doc_freq, Some(classes))?
        }
        (None, TaskArg::And) => synthetic::and_task(setup.corpus.n_docs, a.dims, setup.corpus_seed)?,
    };
    let (mut train, mut val, mut test) = split(&ds, setup.fractions, setup.split_seed)?;

    if let Some(count) = a.noise_count {
        let target = a
            .target_class
            .as_deref()
            .ok_or_else(|| CliError::usage("--noise-count needs --target-class"))?;
        let spec = NoiseSpec {
            count,
            p_target: a.p_target.unwrap_or(0.35),
            p_other: a.p_other.unwrap_or(0.05),
            target_class: output::class_index(&ds, target)?,
            seed: cfg.seed,
        };
        // training and validation rows share the bias; test rows do not
        let ids;
        (train, ids) = append_noise_columns(&train, &spec, NoiseMode::Biased, 1)?;
        (test, _) = append_noise_columns(&test, &spec, NoiseMode::Uniform, 2)?;
        (val, _) = append_noise_columns(&val, &spec, NoiseMode::Biased, 3)?;
        let terms = ids.iter().map(|&i| train.vocabulary.term(i)).collect();
        write_json(&a.out.join("noise.json"), &NoiseRecord { spec: &spec, feature_ids: &ids, terms })?;
    }

    DatasetFile::save(&train, a.out.join(output::TRAIN_FILE))?;
    DatasetFile::save(&val, a.out.join(output::VAL_FILE))?;
    DatasetFile::save(&test, a.out.join(output::TEST_FILE))?;
    write_json(&a.out.join(output::VOCAB_FILE), train.vocabulary.terms())?;
    config::capture(&a.out, "config.json", cmd, &cfg)?;

    let summary = Summary {
        n_docs: ds.len(),
        n_features: train.n_features(),
        classes: ds.class_names.clone(),
        train: train.len(),
        val: val.len(),
        test: test.len(),
    };
    print!("{}", output::to_json_string(&summary));
    Ok(())
}
