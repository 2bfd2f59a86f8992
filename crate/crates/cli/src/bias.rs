//! `lenp bias-exp`: how often each strategy exposes planted noisy features.

use lenp::bias::{run_bias_suite, BiasSetting};

use crate::config::{self, RunConfig};
use crate::output::{ensure_dir, write_json, write_text};
use crate::{BiasArgs, CliResult, Command, SettingArg};

pub fn run(a: &BiasArgs, cfg: RunConfig, cmd: &Command) -> CliResult<()> {
    let setting = match a.setting {
        SettingArg::S1 => BiasSetting::s1(),
        SettingArg::S2 => BiasSetting::s2(),
    };
    ensure_dir(&a.out)?;
    let summary = run_bias_suite(&setting, &cfg.bias, a.trials, cfg.seed)?;
    let stem = format!("bias_{}", setting.name.to_lowercase());
    write_json(&a.out.join(format!("{stem}.json")), &summary)?;
    let table = format!("{summary}\n");
    write_text(&a.out.join(format!("{stem}.md")), &table)?;
    config::capture(&a.out, &format!("{stem}_config.json"), cmd, &cfg)?;
    print!("{table}");
    Ok(())
}
