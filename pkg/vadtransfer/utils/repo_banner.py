from .default_values import OutputColors


def get_banner():
    return _banner


_banner = f"""
{OutputColors.Green}{OutputColors.BOLD}  __   ___   ___  {OutputColors.White}{OutputColors.YELLOW} _____                   __          {OutputColors.White}
{OutputColors.Green}{OutputColors.BOLD}  \\ \\ / /_\\ |   \\ {OutputColors.White}{OutputColors.YELLOW}|_   _| _ __ _ _ _  ___/ _|___ _ _  {OutputColors.White}
{OutputColors.Green}{OutputColors.BOLD}   \\ V / _ \\| |) |{OutputColors.White}{OutputColors.YELLOW}  | || '_/ _` | ' \\(_-<  _/ -_) '_| {OutputColors.White}
{OutputColors.Green}{OutputColors.BOLD}    \\_/_/ \\_\\___/ {OutputColors.White}{OutputColors.YELLOW}  |_||_| \\__,_|_||_/__/_| \\___|_|   {OutputColors.White}
"""
